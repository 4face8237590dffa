"""Response grammars for every player utterance the game master accepts.

All parsers are pure functions. A response either parses to a value or raises
:class:`BadFormat`; nothing else escapes, whatever the input.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

DIRECTIONS = ("north", "south", "east", "west")

TAGS = ("DESCRIPTION", "QUESTION", "ANSWER", "DECISION", "Expression", "Answer")

_WHITESPACE = " \t\n\r\f\v"

# upper bound on whitespace tokens in a DECISION payload
MAX_DECISION_TOKENS = 5


class BadFormat(ValueError):
    """A player response that violates the expected grammar.

    ``reason`` is a short machine-readable code (``wrong_tag``,
    ``empty_payload``, ``invalid_json`` ...).
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class Decision(enum.Enum):
    SAME = "same"
    DIFFERENT = "different"


@dataclass(frozen=True)
class TaggedUtterance:
    tag: str
    payload: str

    def serialize(self) -> str:
        return f"{self.tag}: {self.payload}"


@dataclass(frozen=True)
class MoveAction:
    """Either ``GO: <direction>`` (direction set) or ``DONE`` (direction None)."""

    direction: str | None = None

    @property
    def is_done(self) -> bool:
        return self.direction is None

    def serialize(self) -> str:
        return "DONE" if self.direction is None else f"GO: {self.direction}"


DONE = MoveAction(None)


@dataclass(frozen=True)
class ReportedGraph:
    nodes: tuple[str, ...]
    edges: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": {d: [list(p) for p in pairs] for d, pairs in self.edges.items()},
        }


@dataclass(frozen=True)
class GraphAnswer:
    action: MoveAction
    description: str | None = None
    graph: ReportedGraph | None = None


def normalize(raw: str) -> str:
    """Strip leading/trailing whitespace and newlines only."""
    return raw.strip(_WHITESPACE)


def parse_tagged(raw: str, expected: str) -> TaggedUtterance:
    if expected not in TAGS:
        raise ValueError(f"unknown tag {expected!r}")
    text = normalize(raw)
    prefix = f"{expected}:"
    if not text.startswith(prefix):
        raise BadFormat("wrong_tag", f"expected {expected!r}")
    rest = text[len(prefix):]
    if not rest.strip(_WHITESPACE):
        raise BadFormat("empty_payload", f"nothing after {prefix!r}")
    if not rest.startswith(" "):
        raise BadFormat("wrong_tag", f"expected {prefix!r} followed by a space")
    return TaggedUtterance(expected, rest[1:])


_MOVES = {f"GO: {d}": MoveAction(d) for d in DIRECTIONS}
_MOVES["DONE"] = DONE


def parse_move(raw: str) -> MoveAction:
    text = normalize(raw)
    try:
        return _MOVES[text]
    except KeyError:
        raise BadFormat("bad_action", repr(text[:80])) from None


def _parse_graph(obj) -> ReportedGraph:
    if isinstance(obj, str):
        # the prompt template shows the graph as a quoted JSON string
        try:
            obj = json.loads(obj)
        except (ValueError, RecursionError):
            raise BadFormat("bad_graph", "graph string is not JSON") from None
    if not isinstance(obj, dict):
        raise BadFormat("bad_graph", "graph must be an object")
    nodes = obj.get("nodes")
    edges = obj.get("edges")
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise BadFormat("bad_graph", "nodes must be a list of strings")
    if not isinstance(edges, dict):
        raise BadFormat("bad_graph", "edges must be an object")
    node_set = set(nodes)
    parsed: dict[str, tuple[tuple[str, str], ...]] = {}
    for direction, pairs in edges.items():
        if direction not in DIRECTIONS:
            raise BadFormat("bad_graph", f"unknown direction {direction!r}")
        if not isinstance(pairs, list):
            raise BadFormat("bad_graph", "edge list must be a list")
        out = []
        for pair in pairs:
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(p, str) for p in pair)
            ):
                raise BadFormat("bad_graph", "edges are pairs of node labels")
            if pair[0] not in node_set or pair[1] not in node_set:
                raise BadFormat("bad_graph", f"edge {pair} uses an unknown node")
            out.append((pair[0], pair[1]))
        parsed[direction] = tuple(out)
    return ReportedGraph(tuple(nodes), parsed)


def parse_graph_answer(
    raw: str, require_graph: bool = False, require_description: bool = False
) -> GraphAnswer:
    """Parse a single JSON object carrying an action (and optional extras)."""
    text = normalize(raw)
    if not text.startswith("{"):
        raise BadFormat("invalid_json", "response must be a single JSON object")
    try:
        obj = json.loads(text)
    except (ValueError, RecursionError):
        raise BadFormat("invalid_json", repr(text[:80])) from None
    if not isinstance(obj, dict):
        raise BadFormat("invalid_json", "response must be a single JSON object")

    if "action" not in obj:
        raise BadFormat("missing_field", "action")
    if not isinstance(obj["action"], str):
        raise BadFormat("bad_action", "action must be a string")
    try:
        action = parse_move(obj["action"])
    except BadFormat as exc:
        raise BadFormat("bad_action", exc.detail) from None

    description = obj.get("description")
    if require_description:
        if not isinstance(description, str) or not description.strip():
            raise BadFormat("missing_field", "description")
    elif description is not None and not isinstance(description, str):
        raise BadFormat("missing_field", "description must be a string")

    graph = None
    if "graph" in obj:
        graph = _parse_graph(obj["graph"])
    elif require_graph:
        raise BadFormat("missing_field", "graph")
    return GraphAnswer(action, description, graph)


def parse_decision(payload: str) -> Decision:
    """Map a DECISION payload to SAME/DIFFERENT; explanations are rejected."""
    tokens = payload.split()
    if len(tokens) > MAX_DECISION_TOKENS:
        raise BadFormat("explanation", f"{len(tokens)} tokens")
    lowered = payload.lower()
    has_same = "same" in lowered
    has_diff = "different" in lowered
    if has_same and has_diff:
        raise BadFormat("ambiguous", payload)
    if has_same:
        return Decision.SAME
    if has_diff:
        return Decision.DIFFERENT
    raise BadFormat("missing_keyword", payload)


ORDINALS = ("first", "second", "third")


def parse_reference_answer(payload: str) -> int:
    """``first|second|third`` (case-insensitive, optional trailing period) -> 0..2."""
    word = payload.strip(_WHITESPACE)
    if word.endswith("."):
        word = word[:-1]
    try:
        return ORDINALS.index(word.lower())
    except ValueError:
        raise BadFormat("bad_answer", repr(payload[:80])) from None
