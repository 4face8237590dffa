"""Reference game: A refers to a target among two distractors, B picks it out."""

from __future__ import annotations

from typing import Sequence

from ..core import GM, PLAYER_A, PLAYER_B, Game, GameInstance, GameMaster, Message
from ..parsing import BadFormat, parse_reference_answer, parse_tagged

PROMPT_A = """You are given three images, one is called target and the other two are distractors.
Your task is to generate a referring expression that best describes the target image while distinguishing it from the two other distractor images.
The first image is <IMAGE_POSITION>, the second image is <IMAGE_POSITION>, and the third image is <IMAGE_POSITION>.

Instruction: Describe the target image. Generate the referring expression starting with the tag "Expression: " for the given target image. Omit any other text.

Target image: <IMAGE_PATH>
Second image: <IMAGE_PATH>
Third image: <IMAGE_PATH>
"""

PROMPT_B = """You are given three images. You are also given a referring expression that describes one of the given images.
Your task is to select the image that matches the given referring expression.
Generate only the number (in text) of the image that matches the given expression by selecting first, second, or third.

TARGET_EXPRESSION
Question: Which image does the expression refer to?
Start with the tag "Answer: ", followed by your selection. Omit any other text.


First image: <IMAGE_PATH>
Second image: <IMAGE_PATH>
Third image: <IMAGE_PATH>
"""


def fill_sequential(template: str, slot: str, values: Sequence[str]) -> str:
    for v in values:
        template = template.replace(slot, v, 1)
    return template


def as_grid_prompt(text: str) -> str:
    """Swap the picture vocabulary for the character-grid rendering."""
    return text.replace("images", "grids").replace("image", "grid")


def target_position_b(payload: dict) -> int:
    return list(payload["order_b"]).index(payload["target_index_a"])


class ReferenceGame(Game):
    """``modality='text'`` shows rendered grids inline; ``'image'`` attaches files."""

    roles = (PLAYER_A, PLAYER_B)
    default_turn_limit = 2
    base_id = "reference"

    def __init__(self, modality: str = "image"):
        if modality not in ("text", "image"):
            raise ValueError(f"unknown modality {modality!r}")
        self.modality = modality
        self.game_id = "reference-text" if modality == "text" else "reference"

    def accepts(self, instance: GameInstance) -> bool:
        if instance.game != self.base_id:
            return False
        return self.modality == "image" or bool(instance.payload.get("grids"))

    def stimuli(self, payload: dict) -> list[str]:
        return list(payload["grids"] if self.modality == "text" else payload["images"])

    def _template(self, template: str) -> str:
        return as_grid_prompt(template) if self.modality == "text" else template

    def _attachments(self, stimuli: list[str]) -> list[str]:
        return [] if self.modality == "text" else stimuli

    def _slot(self, stimulus: str) -> str:
        return "\n" + stimulus if self.modality == "text" else stimulus

    def prompt_a(self, payload: dict) -> tuple[str, list[str]]:
        stim = self.stimuli(payload)
        t = payload["target_index_a"]
        order = [t] + [i for i in range(3) if i != t]
        text = fill_sequential(self._template(PROMPT_A), "<IMAGE_POSITION>",
                               ["the target", "a distractor", "a distractor"])
        text = fill_sequential(text, "<IMAGE_PATH>", [self._slot(stim[i]) for i in order])
        return text, self._attachments([stim[i] for i in order])

    def prompt_b(self, payload: dict, expression_line: str) -> tuple[str, list[str]]:
        stim = self.stimuli(payload)
        order = list(payload["order_b"])
        text = fill_sequential(self._template(PROMPT_B), "<IMAGE_PATH>", [self._slot(stim[i]) for i in order])
        text = text.replace("TARGET_EXPRESSION", expression_line)
        return text, self._attachments([stim[i] for i in order])

    def play(self, gm: GameMaster, instance: GameInstance) -> None:
        payload = instance.payload
        prompt, images = self.prompt_a(payload)
        expression = parse_tagged(gm.ask(PLAYER_A, prompt, images), "Expression")
        prompt, images = self.prompt_b(payload, expression.serialize())
        answer = parse_tagged(gm.ask(PLAYER_B, prompt, images), "Answer")
        parse_reference_answer(answer.payload)

    def score(self, instance: GameInstance, events: Sequence[Message]) -> dict[str, float]:
        answers = [m.content for m in events if m.sender == PLAYER_B and m.recipient == GM]
        chosen = None
        if answers:
            try:
                chosen = parse_reference_answer(parse_tagged(answers[0], "Answer").payload)
            except BadFormat:
                chosen = None
        success = chosen is not None and chosen == target_position_b(instance.payload)
        return {"success": int(success), "quality": 100.0 * success}
