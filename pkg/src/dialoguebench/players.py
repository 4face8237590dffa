"""Players: scripted agents, a terminal human, and a remote chat-API client.

Every player is bound to one episode with ``bind(instance, role)``; the
bound object then answers prompts through ``respond(view)``. Scripted
players only read the part of the instance their role is entitled to see.
"""

from __future__ import annotations

import base64
import json
import logging
import mimetypes
import os
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, TextIO

import httpx
import numpy as np

from . import grids
from .core import (
    PLAYER_A,
    PLAYER_B,
    ConfigurationError,
    GameInstance,
    InfrastructureError,
    Message,
    PlayerTranscriptView,
)
from .games.matchit import ANSWER, ASK, DECIDE
from .games.mapworld import ExplorationState, step
from .maps import MapGraph, bfs_distances, direction_between
from .metrics import find_shortest_paths
from .parsing import DIRECTIONS, DONE, MoveAction, parse_tagged

logger = logging.getLogger(__name__)

ROLE_INDEX = {PLAYER_A: 0, PLAYER_B: 1}


def _rng(seed: int, instance: GameInstance, role: str) -> np.random.Generator:
    return np.random.default_rng([seed, instance.seed, ROLE_INDEX.get(role, 2)])


def _first_prompt(view: PlayerTranscriptView) -> str:
    for msg in view.history:
        if msg.sender == "GM":
            return msg.content
    return view.pending_prompt.content


@dataclass
class AnswerFormat:
    """What a map prompt asks for, read off the opening instructions."""

    json: bool
    graph: bool
    description: bool

    @classmethod
    def from_prompt(cls, prompt: str) -> AnswerFormat:
        graph = '"graph"' in prompt
        description = '"description"' in prompt
        return cls(graph or description, graph, description)

    def render(self, action: MoveAction, description: str = "", graph: dict | None = None) -> str:
        if not self.json:
            return action.serialize()
        out: dict = {"action": action.serialize()}
        if self.description:
            out["description"] = description or "We are in a room."
        if self.graph:
            out["graph"] = graph if graph is not None else {"nodes": [], "edges": {d: [] for d in DIRECTIONS}}
        return json.dumps(out)


# --- scripted map players ------------------------------------------------------

def reported_graph(m: MapGraph, visited: set[int]) -> dict:
    """The visited part of the map in the answer format (names, directed pairs)."""
    nodes = [m.category(v) for v in sorted(visited)]
    edges: dict[str, list] = {d: [] for d in DIRECTIONS}
    for a, b in sorted(m.edges):
        if a in visited and b in visited:
            d = direction_between(m.room(a).coord, m.room(b).coord)
            edges[d].append([m.category(a), m.category(b)])
    return {"nodes": nodes, "edges": edges}


class MapScript:
    """Base for scripted map players: tracks the position, renders answers."""

    def __init__(self, instance: GameInstance, name: str):
        self.name = name
        self.single_episode_affinity = False
        self.map = MapGraph.from_dict(instance.payload["map"])
        self.game = instance.game
        self.state = ExplorationState.initial(self.map)
        self.format: AnswerFormat | None = None

    def choose(self) -> MoveAction:
        raise NotImplementedError

    def respond(self, view: PlayerTranscriptView) -> str:
        if self.format is None:
            self.format = AnswerFormat.from_prompt(_first_prompt(view))
        action = self.choose()
        graph = reported_graph(self.map, self.state.visited)
        here = self.map.category(self.state.current)
        text = self.format.render(action, f"We are in a room that looks like a {here.lower()}.", graph)
        self.state = step(self.map, self.state, action).state
        return text


class OptimalExplorer(MapScript):
    """Follows the first of the shortest covering walks; DONE once nothing is left."""

    def choose(self) -> MoveAction:
        s = self.state
        if self.game == "mapworld-g2x":
            return self._toward_target()
        paths = find_shortest_paths(self.map.edges, s.visited, s.seen, s.current)
        best = min(paths)
        if len(best) == 1:
            return DONE
        return self._move_to(best[1])

    def _move_to(self, node: int) -> MoveAction:
        return MoveAction(direction_between(self.map.room(self.state.current).coord, self.map.room(node).coord))

    def _toward_target(self) -> MoveAction:
        m, cur = self.map, self.state.current
        goal = m.category(m.target)
        if m.category(cur) == goal:
            return DONE
        dist = bfs_distances(m, cur)
        target = min((d, v) for v, d in dist.items() if m.category(v) == goal)[1]
        back = bfs_distances(m, target)
        nxt = min(v for v in m.neighbors(cur) if back[v] == back[cur] - 1)
        return self._move_to(nxt)


class Stopper(MapScript):
    def choose(self) -> MoveAction:
        return DONE


class Looper(MapScript):
    def choose(self) -> MoveAction:
        return MoveAction("north")


class RandomMover(MapScript):
    def __init__(self, instance: GameInstance, name: str, rng: np.random.Generator):
        super().__init__(instance, name)
        self.rng = rng

    def choose(self) -> MoveAction:
        options = [MoveAction(d) for d in DIRECTIONS] + [DONE]
        return options[int(self.rng.integers(len(options)))]


# --- scripted reference players ---------------------------------------------------

def _stimulus_text(payload: dict, index: int, prompt: str) -> str:
    """How a stimulus appears in a prompt: the grid rendering or the file path."""
    grid_rows = payload.get("grids")
    if grid_rows and grid_rows[index] in prompt:
        return grids.one_line(grids.parse(grid_rows[index]))
    return payload["images"][index]


class ReferenceSpeaker:
    """Names the target by its own rendering, which is always unambiguous."""

    def __init__(self, instance: GameInstance, name: str):
        self.name, self.single_episode_affinity = name, False
        self.payload = instance.payload

    def respond(self, view: PlayerTranscriptView) -> str:
        t = self.payload["target_index_a"]
        return "Expression: " + _stimulus_text(self.payload, t, view.pending_prompt.content)


class ReferenceListener:
    """Picks the displayed stimulus whose rendering the expression quotes."""

    def __init__(self, instance: GameInstance, name: str):
        self.name, self.single_episode_affinity = name, False
        self.payload = instance.payload

    def respond(self, view: PlayerTranscriptView) -> str:
        prompt = view.pending_prompt.content
        expression = prompt.split("Expression: ", 1)[1].split("\n", 1)[0] if "Expression: " in prompt else ""
        for pos, i in enumerate(self.payload["order_b"]):
            if _stimulus_text(self.payload, i, prompt) == expression:
                return "Answer: " + ("first", "second", "third")[pos]
        return "Answer: first"


class RandomListener:
    def __init__(self, name: str, rng: np.random.Generator):
        self.name, self.single_episode_affinity = name, False
        self.rng = rng

    def respond(self, view: PlayerTranscriptView) -> str:
        return "Answer: " + ("first", "second", "third")[int(self.rng.integers(3))]


# --- scripted MatchIt players -------------------------------------------------------

class MatchItOracle:
    """Truthful player: describes its stimulus exactly and answers honestly.

    Decides SAME iff the partner's description and every answer it received
    agree with its own stimulus.
    """

    def __init__(self, instance: GameInstance, role: str, name: str):
        self.name, self.single_episode_affinity = name, False
        payload = instance.payload
        self.stimulus = payload["stimulus_a" if role == PLAYER_A else "stimulus_b"]
        self.text = payload.get("modality", "text") == "text"
        self.role = role
        self.asked = 0

    def _rows(self) -> list[str]:
        return self.stimulus.split("\n")

    def description(self) -> str:
        if self.text:
            return grids.one_line(grids.parse(self.stimulus))
        return f"the file {self.stimulus}"

    def question(self) -> str:
        k = self.asked % len(self._rows()) if self.text else 0
        self.asked += 1
        if self.text:
            return f"What is row {k + 1} of your grid?"
        return "What is the file name of your image?"

    def answer(self, question: str) -> str:
        if question.startswith("What is row ") and self.text:
            k = int(question.split()[3]) - 1
            rows = self._rows()
            return f"Row {k + 1} is {rows[k]}" if 0 <= k < len(rows) else "There is no such row."
        return f"It is {self.stimulus}" if not self.text else "I cannot tell."

    def consistent(self, history: tuple[Message, ...]) -> bool:
        partner = [m.content for m in history if m.sender not in ("GM", self.role)]
        mine = [m.content for m in history if m.sender == self.role and m.recipient == "GM"]
        ok = any(c == "DESCRIPTION: " + self.description() for c in partner)
        questions = [parse_tagged(c, "QUESTION").payload for c in mine if c.startswith("QUESTION: ")]
        answers = [parse_tagged(c, "ANSWER").payload for c in partner if c.startswith("ANSWER: ")]
        for q, a in zip(questions, answers):
            ok = ok and a == self.answer(q)
        return ok

    def respond(self, view: PlayerTranscriptView) -> str:
        prompt = view.pending_prompt.content
        if prompt == ASK:
            return "QUESTION: " + self.question()
        if prompt == ANSWER:
            asked = [m.content for m in view.history if m.sender not in ("GM", self.role)
                     and m.content.startswith("QUESTION: ")]
            return "ANSWER: " + self.answer(asked[-1][len("QUESTION: "):] if asked else "")
        if prompt == DECIDE:
            return "DECISION: " + ("same image" if self.consistent(view.history) else "different images")
        return "DESCRIPTION: " + self.description()


# --- constant-output players --------------------------------------------------------

class Constant:
    def __init__(self, name: str, text: str):
        self.name, self.single_episode_affinity = name, False
        self.text = text

    def respond(self, view: PlayerTranscriptView) -> str:
        return self.text


# --- registry -----------------------------------------------------------------------

class ScriptedPlayer:
    """Factory for the named scripted policies; binding picks the game-specific script."""

    NAMES = ("oracle", "optimal", "stopper", "looper", "random_mover", "format_violator", "random_b")
    single_episode_affinity = False

    def __init__(self, policy: str, seed: int = 0):
        if policy not in self.NAMES:
            raise ConfigurationError(f"unknown scripted player {policy!r}; known: {', '.join(self.NAMES)}")
        self.policy = policy
        self.seed = seed
        self.name = f"scripted-{policy}"

    def bind(self, instance: GameInstance, role: str):
        p, game, name = self.policy, instance.game, self.name
        if p == "format_violator":
            return Constant(name, "hello")
        if game.startswith("mapworld"):
            scripts = {"oracle": OptimalExplorer, "optimal": OptimalExplorer, "stopper": Stopper, "looper": Looper}
            if p in scripts:
                return scripts[p](instance, name)
            if p == "random_mover":
                return RandomMover(instance, name, _rng(self.seed, instance, role))
        elif game == "reference":
            if p in ("oracle", "optimal") or (p == "random_b" and role == PLAYER_A):
                return ReferenceSpeaker(instance, name) if role == PLAYER_A else ReferenceListener(instance, name)
            if p == "random_b":
                return RandomListener(name, _rng(self.seed, instance, role))
        elif game.startswith("matchit") and p in ("oracle", "optimal"):
            return MatchItOracle(instance, role, name)
        raise ConfigurationError(f"scripted player {p!r} cannot play {game}")

    def respond(self, view: PlayerTranscriptView) -> str:  # pragma: no cover - always bound first
        raise ConfigurationError("bind the player to an episode first")


# --- human ----------------------------------------------------------------------------

class HumanPlayer:
    """Plays from a terminal: shows each prompt, returns what the operator types.

    A line starting with ``{`` opens a multi-line block that ends at the first
    blank line (for JSON answers); anything else is a single line.
    """

    single_episode_affinity = True

    def __init__(self, stdin: TextIO | None = None, stdout: TextIO | None = None, name: str = "human"):
        self.stdin = stdin
        self.stdout = stdout
        self.name = name

    def bind(self, instance: GameInstance, role: str) -> HumanPlayer:
        return self

    def respond(self, view: PlayerTranscriptView) -> str:
        stdin = self.stdin or sys.stdin
        out = self.stdout or sys.stdout
        msg = view.pending_prompt
        own = [i for i, m in enumerate(view.history) if m.sender == msg.recipient]
        for prior in view.history[own[-1] + 1 if own else 0:]:
            if prior.sender not in ("GM", msg.recipient):
                out.write(f"[{prior.sender}] {prior.content}\n")
        out.write(f"\n--- {msg.recipient}, turn {msg.turn_index} ---\n{msg.content}\n")
        for path in msg.attachments:
            out.write(f"[image] {path}\n")
        out.write("> ")
        out.flush()
        first = stdin.readline()
        if not first:
            raise InfrastructureError("input closed")
        first = first.rstrip("\n")
        if not first.lstrip().startswith("{"):
            return first
        lines = [first]
        for line in iter(stdin.readline, ""):
            if not line.strip():
                break
            lines.append(line.rstrip("\n"))
        return "\n".join(lines)


# --- remote ---------------------------------------------------------------------------

@dataclass
class EndpointConfig:
    base_url: str
    model: str
    api_style: str = "chat"
    max_tokens: int = 512
    temperature: float = 0.0
    concurrency: int = 4
    auth_env: str = "DIALOGUEBENCH_API_KEY"
    timeout: float = 60.0
    retries: int = 3

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> EndpointConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            cfg = cls(**data)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigurationError(f"bad endpoint config {path}: {exc}") from exc
        if cfg.api_style != "chat":
            raise ConfigurationError(f"unsupported api_style {cfg.api_style!r}")
        return cfg


def image_part(path: str) -> dict:
    mime = mimetypes.guess_type(path)[0] or "application/octet-stream"
    try:
        data = base64.b64encode(Path(path).read_bytes()).decode("ascii")
    except OSError as exc:
        raise ConfigurationError(f"cannot read image {path}: {exc}") from exc
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{data}"}}


def to_chat_message(msg: Message, role: str) -> dict:
    speaker = "assistant" if msg.sender == role else "user"
    if not msg.attachments:
        return {"role": speaker, "content": msg.content}
    parts = [{"type": "text", "text": msg.content}] + [image_part(p) for p in msg.attachments]
    return {"role": speaker, "content": parts}


def chat_messages(view: PlayerTranscriptView) -> list[dict]:
    """One chat message per visible event plus the pending prompt."""
    role = view.pending_prompt.recipient
    return [to_chat_message(m, role) for m in (*view.history, view.pending_prompt)]


class RemotePlayer:
    """Generic chat-completions client. Thread-safe; in-flight requests are capped."""

    single_episode_affinity = False

    def __init__(
        self,
        config: EndpointConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        environ: Mapping[str, str] | None = None,
    ):
        env = os.environ if environ is None else environ
        token = env.get(config.auth_env)
        if not token:
            raise ConfigurationError(f"environment variable {config.auth_env} is not set")
        self.config = config
        self.name = config.model
        self._headers = {"Authorization": f"Bearer {token}"}
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep
        self._slots = threading.Semaphore(max(1, config.concurrency))
        self.retries_used = 0

    def bind(self, instance: GameInstance, role: str) -> RemotePlayer:
        return self

    def request_body(self, view: PlayerTranscriptView) -> dict:
        return {
            "model": self.config.model,
            "messages": chat_messages(view),
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        }

    def respond(self, view: PlayerTranscriptView) -> str:
        body = self.request_body(view)
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        with self._slots:
            for attempt in range(self.config.retries + 1):
                try:
                    resp = self._client.post(url, json=body, headers=self._headers)
                except httpx.HTTPError as exc:
                    failure = f"{type(exc).__name__}: {exc}"
                else:
                    if resp.status_code < 400:
                        return self._extract(resp)
                    failure = f"HTTP {resp.status_code}"
                    if resp.status_code < 500 and resp.status_code not in (408, 429):
                        raise InfrastructureError(f"{failure}: {resp.text[:200]}")
                if attempt == self.config.retries:
                    break
                self.retries_used += 1
                delay = 0.5 * 2 ** attempt
                logger.warning("request failed (%s); retry %d in %.1fs", failure, attempt + 1, delay)
                self._sleep(delay)
        raise InfrastructureError(f"giving up after {self.config.retries} retries: {failure}")

    @staticmethod
    def _extract(resp: httpx.Response) -> str:
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise InfrastructureError(f"malformed API response: {exc}") from exc
        if not isinstance(content, str):
            raise InfrastructureError("malformed API response: content is not text")
        return content


# --- spec strings ---------------------------------------------------------------------

def resolve_player(spec: str, seed: int = 0):
    """``scripted:<name>``, ``human`` or ``remote:<config.json>``."""
    kind, _, arg = spec.partition(":")
    if kind == "scripted" and arg:
        return ScriptedPlayer(arg, seed)
    if kind == "human" and not arg:
        return HumanPlayer()
    if kind == "remote" and arg:
        return RemotePlayer(EndpointConfig.from_file(arg))
    raise ConfigurationError(f"bad player spec {spec!r}; use scripted:<name>, human or remote:<config>")
