"""MatchIt: two players decide whether their private stimuli are the same.

Phases: both describe (A first), ``max_qa_rounds`` rounds of questions (B
asks first in each round, then A), then both decide (B first). Every
accepted utterance is relayed verbatim to the other player.
"""

from __future__ import annotations

from typing import Sequence

from ..core import GM, PLAYER_A, PLAYER_B, Game, GameInstance, GameMaster, Message
from ..parsing import BadFormat, Decision, normalize, parse_decision, parse_tagged

DEFAULT_QA_ROUNDS = 3

TASK = """You are playing a collaborative game with another player. Each of you has been given an image. You cannot see the other player's image. Together you have to find out whether you were given the same image or two different images.

The game has three phases. First, each of you describes your own image. Then you take turns asking each other questions about the images and answering them. Finally, each of you decides whether the images are the same or different.

Every message you send has to start with the right flag, followed by a colon and a space:
"DESCRIPTION: " for a description of your image,
"QUESTION: " for a question to the other player,
"ANSWER: " for an answer to a question of the other player,
"DECISION: " for your final decision, which is either "same image" or "different images".
Any message that does not start with the expected flag ends the game. Do not explain your decision.

This is your image:
$STIMULUS$

"""

DESCRIBE = "Describe your image. Start with \"DESCRIPTION: \"."
ASK = "Ask a question. Start with \"QUESTION: \"."
ANSWER = "Answer the question of the other player. Start with \"ANSWER: \"."
DECIDE = "Come to a decision. Start with \"DECISION: \"."

OTHER = {PLAYER_A: PLAYER_B, PLAYER_B: PLAYER_A}


def as_grid_prompt(text: str) -> str:
    return text.replace("images", "grids").replace("image", "grid")


class MatchItGame(Game):
    """``modality='text'`` inlines character grids; ``'image'`` attaches files."""

    roles = (PLAYER_A, PLAYER_B)
    # 2 descriptions + 4 utterances per round + 2 decisions
    default_turn_limit = 2 + 4 * DEFAULT_QA_ROUNDS + 2

    def __init__(self, modality: str = "text", max_qa_rounds: int = DEFAULT_QA_ROUNDS):
        if modality not in ("text", "image"):
            raise ValueError(f"unknown modality {modality!r}")
        if max_qa_rounds < 1:
            raise ValueError("max_qa_rounds must be >= 1")
        self.modality = modality
        self.max_qa_rounds = max_qa_rounds
        self.default_turn_limit = 4 + 4 * max_qa_rounds
        self.game_id = "matchit-ascii" if modality == "text" else "matchit"

    def _wording(self, text: str) -> str:
        return as_grid_prompt(text) if self.modality == "text" else text

    def stimulus(self, payload: dict, role: str) -> str:
        return payload["stimulus_a" if role == PLAYER_A else "stimulus_b"]

    def first_prompt(self, payload: dict, role: str) -> tuple[str, list[str]]:
        stim = self.stimulus(payload, role)
        if self.modality == "text":
            return self._wording(TASK + DESCRIBE).replace("$STIMULUS$", stim), []
        return TASK.replace("$STIMULUS$", "(attached)") + DESCRIBE, [stim]

    @staticmethod
    def _say(gm: GameMaster, role: str, prompt: str, tag: str, images: Sequence[str] = ()) -> str:
        raw = gm.ask(role, prompt, images)
        parse_tagged(raw, tag)
        return normalize(raw)

    def play(self, gm: GameMaster, instance: GameInstance) -> None:
        p = instance.payload
        descriptions = {}
        for role in (PLAYER_A, PLAYER_B):
            prompt, images = self.first_prompt(p, role)
            descriptions[role] = self._say(gm, role, prompt, "DESCRIPTION", images)
        gm.relay(PLAYER_A, PLAYER_B, descriptions[PLAYER_A])
        gm.relay(PLAYER_B, PLAYER_A, descriptions[PLAYER_B])
        for _ in range(self.max_qa_rounds):
            for asker in (PLAYER_B, PLAYER_A):
                answerer = OTHER[asker]
                gm.relay(asker, answerer, self._say(gm, asker, ASK, "QUESTION"))
                gm.relay(answerer, asker, self._say(gm, answerer, ANSWER, "ANSWER"))
        for role in (PLAYER_B, PLAYER_A):
            raw = self._say(gm, role, DECIDE, "DECISION")
            parse_decision(parse_tagged(raw, "DECISION").payload)

    def decisions(self, events: Sequence[Message]) -> dict[str, Decision]:
        out = {}
        for msg in events:
            if msg.recipient != GM or msg.sender not in OTHER:
                continue
            try:
                out[msg.sender] = parse_decision(parse_tagged(msg.content, "DECISION").payload)
            except BadFormat:
                continue
        return out

    def score(self, instance: GameInstance, events: Sequence[Message]) -> dict[str, float]:
        truth = Decision(instance.payload["ground_truth"])
        decided = self.decisions(events)
        correct = {r: decided.get(r) == truth for r in (PLAYER_A, PLAYER_B)}
        success = all(correct.values())
        return {
            "success": int(success),
            "correct_a": int(correct[PLAYER_A]),
            "correct_b": int(correct[PLAYER_B]),
            "quality": 100.0 * success,
        }
