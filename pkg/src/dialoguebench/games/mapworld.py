"""MapWorld: explore a lattice of rooms with cardinal moves.

Three variants: explore exhaustively (``ee``), explore exhaustively while
reporting the uncovered graph (``eegr``), and go to a room of a given
category (``g2x``). Each can be presented as text (room names given) or
multimodal (room images attached, names never given).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..core import GM, PLAYER_A, Game, GameInstance, GameMaster, Message
from ..maps import MapGraph
from ..metrics import (
    LabeledGraph,
    efficiency_from_flags,
    exploration,
    graph_similarity,
    trace_moves,
)
from ..parsing import BadFormat, GraphAnswer, MoveAction, parse_graph_answer, parse_move

VARIANTS = ("ee", "eegr", "g2x")
MODALITIES = ("text", "image")

TEXT_EE = """Please help me with the following task. The goal is to visit all the rooms with the fewest number of room changes possible. In each room, you need to decide the direction to go in. Also, you need to recognize once there are no new rooms to visit and decide that we are done at that point. Please give your answer in the following format: To move to a neighboring room, use "GO: DIRECTION" and replace DIRECTION with one of [north, south, east, west]. To stop the exploration, answer with "DONE" instead. Omit any other text.

Here is an example:

You are in the Kitchen. Currently available directions: south, west. What is your next instruction?

GO: west

You have made a step and entered a Lobby. Currently available directions: east, north. What is your next instruction?

GO: north

...

You have made a step and entered a Bedroom. Currently available directions: south. What is your next instruction?

DONE

Let us start. You are in the $INITIAL_ROOM$. Currently available directions: $INITIAL_DIRECTIONS$. What is your next instruction?"""

IMAGE_EE = """We are currently in this room. Please help me with the following task. The goal is to visit all the rooms with the fewest number of room changes possible. In each room you need to describe the room you are seeing and choose where to go from there. Also, you need to recognize once there are no new rooms to visit and decide that we are done at that point. Please give your answer in the following format: "{"description": "<room description>", "action": "<action>"}". Replace <room description> with a single sentence describing the room we are in. To move to a neighboring room, replace <action> with "GO: DIRECTION" where DIRECTION can be one of [north, south, east, west]. To stop the exploration, replace <action> with "DONE". Omit any other text.

Here is an example:

We are in this room. From here we can go: north, west. What is your next instruction?

{"description": "We are in a kitchen with a red fridge.", "action": "GO: north"}

We have made a step and are now in this room. From here we can go: south, east. What is your next instruction?

{"description": "We are in a living room with a couch and a tv.", "action": "GO: east"}

...

We have made a step and are now in this room. From here we can go: south, east. What is your next instruction?

{"description": "We are in a bathroom", "action": "DONE"}

Let us start.
We have made a step and are now in this room. From here we can go: $INITIAL_DIRECTIONS$. What is your next instruction?"""

TEXT_G2X = """Please help me with the following task. The goal is to explore rooms and find the target room. In each room, you need to decide the direction to go in. Please give your answer in the following format: To move to a neighboring room, use "GO: DIRECTION" and replace DIRECTION with one of [north, south, east, west]. Most importantly, once we have found the target room, answer with "DONE" instead. Omit any other text.

Here is an example:

The target room is a Bedroom. You are in the Kitchen. Currently available directions: south, west. What is your next instruction?

GO: west

You have made a step and entered a Lobby. Currently available directions: east, north. What is your next instruction?

GO: north

...

You have made a step and entered a Bedroom. Currently available directions: south. What is your next instruction?

DONE

Let us start. The target room is $GOAL$. You are in the $INITIAL_ROOM$. Currently available directions: $INITIAL_DIRECTIONS$. What is your next instruction?"""

IMAGE_G2X = """Please help me with the following task. The goal is to explore rooms and find target room. In each room I will show you an image of the room and tell you in what directions we can go from there. You then give me a description of the room you see in exactly one sentence. Please give your answer in the following format: "{"description": "<room description>", "action": "<action>"}". To move to a neighboring room, replace <action> with "GO: DIRECTION" where DIRECTION can be one of [north, south, east, west]. Most importantly, once we have found the target room, replace <action> with "DONE" instead. Omit any other text.

Here is an example:

The target room is a bathroom.
We have made a step and are now in this room. From here we can go: north, west. What is your next instruction?
{"description": "We are in a kitchen with a red fridge.", "action": "GO: north"}

We have made a step and are now in this room. From here we can go: south, east. What is your next instruction?
{"description": "We are in a living room with a couch and a tv.", "action": "GO: east"}

...
We have made a step and are now in this room. From here we can go: south, east. What is your next instruction?
{"description": "We are in a bathroom, there is a shower and a sink", "action": "DONE"}

Let us start. The target room is a $GOAL$
We are now in this room. From here we can go: $INITIAL_DIRECTIONS$. What is your next instruction?"""

TEXT_EEGR = """Please help me with the following task. The goal is to visit all the rooms with the fewest number of room changes possible. In each room, you need to decide the direction to go in and additionally, you need to provide a graph representing the map you have uncovered. Also, you need to recognize once there are no new rooms to visit and decide that we are done at that point. Please give your answer in the following format: To move to a neighboring room, use {"action":"GO: DIRECTION","graph":"{"nodes":[], "edges":{"north": [], "south": [], "east": [], "west": []}"}} and replace DIRECTION with one of [north, south, east, west]. To stop the exploration, answer with "DONE" instead. Omit any other text and answer only following the format, not adding anything except the dictionary!

Here is an example:

You are in the Living Room. Currently available directions: south, west. What is your next instruction?
{"action": "GO: west", "graph": {"nodes":["Living Room"],
"edges":{"north":[], "south":[], "east":[],
"west":[]}}}

You have made a step and entered a Library. Currently available directions: east, north. What is your next instruction?
{"action": "GO: north", "graph":{"nodes":["Living Room", "Library"], "edges":{"north":[], "south":[],
"east":[],"west":[("Living Room", "Library")]}}}

You have made a step and entered a Kitchen. Currently available directions: south, east. What is your next instruction?
{"action": "GO: east", "graph":{"nodes": ["Living Room", "Library", "Kitchen"], "edges":{"north": [("Library", "Kitchen")], "south": [], "east": [], "west": [("Living Room", "Library")]}}}

...

You have made a step and entered a Bedroom. Currently available directions: south, west. What is your next instruction?
{"action": "DONE", "graph": {...}}

Let us start. You are in the $INITIAL_ROOM$. Currently available directions: $INITIAL_DIRECTIONS$. What is your next instruction?"""

IMAGE_EEGR = """We are currently in this room. Please help me with the following task. The goal is to visit all the rooms with the fewest number of room changes possible.  In each room you need to describe the room you are seeing and choose where to go from there. Additionally, you need to provide a graph representing the map you have uncovered. Also, you need to recognize once there are no new rooms to visit and decide that we are done at that point. Please give your answer in the following format:
'{"action":"<action>", "description": "<room description>", "graph": <graph>}'.
<action> needs to be in the format "GO: <direction>" where <direction> is one of [north, east, south, west]. Alternatively, choose "DONE" as your action once you have explored the entire map.
<room description> should be a single sentence describing the room shown to you.
<graph> represents the map in this format: {"nodes":[], "edges":{"north": [], "south": [], "east": [], "west": []}}
Omit any other text and answer only following the format, not adding anything except the dictionary!

Here is an example:

We are in this room. From here we can go: south, west. What is your next instruction?

{"action":"GO: north", "description": "We are in a kitchen with a red fridge.", "graph":{"nodes":["Kitchen"], "edges":{"north": [], "south": [], "east": [], "west": []}}}

We have made a step and are now in this room. From here we can go: east. What is your next instruction?

{"action":"GO: east", "description": "We are in a living room with a couch and a tv.", "graph":{"nodes":["Kitchen", "Living Room"], "edges":{"north": [["Kitchen", "Living Room"]], "south": [], "east": [], "west": []}}}

You have made a step and are now in this room. From here we can go: west, south. What is your next instruction?

{"action":"GO: south", "description": "We are in a bedroom with two beds and a nightstand.",  "graph":{"nodes":["Kitchen", "Living Room", "Bedroom"], "edges":{"north": [["Kitchen", "Living Room"]], "south": [], "east": [["Living Room", "Bedroom"]], "west": []}}}

...

You have made a step and are now in this room. From here we can go: north. What is your next instruction?

Example answer:
{"action":"DONE", "description": "We are in a stairwell, the stair is curved.", "graph":"{...}"}

Let us start.
Currently available directions: $INITIAL_DIRECTIONS$. What is your next instruction?"""

TEXT_MOVED = "You have made a step and entered $ANOTHER_ROOM$. Currently available directions: $DIRECTIONS$. What is your next instruction?"
TEXT_INVALID = "The move is not valid. You are still in the $SAME_ROOM$. Currently available directions: $DIRECTIONS$. What is your next instruction?"
IMAGE_MOVED = "We have made a step and are now in this room. From here we can go: $DIRECTIONS$. What is your next instruction?"
IMAGE_INVALID = "The move was invalid and we are still in this room. From here we can go: $DIRECTIONS$. What is your next instruction?"

INITIAL_PROMPTS = {
    ("ee", "text"): TEXT_EE,
    ("ee", "image"): IMAGE_EE,
    ("g2x", "text"): TEXT_G2X,
    ("g2x", "image"): IMAGE_G2X,
    ("eegr", "text"): TEXT_EEGR,
    ("eegr", "image"): IMAGE_EEGR,
}


def fill(template: str, **values: str) -> str:
    for key, value in values.items():
        template = template.replace(f"${key}$", value)
    return template


def with_article(noun: str) -> str:
    return f"{'an' if noun[:1].lower() in 'aeiou' else 'a'} {noun}"


def directions_text(m: MapGraph, node: int) -> str:
    return ", ".join(sorted(m.exits(node)))


# --- environment -----------------------------------------------------------

@dataclass
class ExplorationState:
    current: int
    visited: set[int]
    seen: set[int]
    moves: list[tuple[str, bool]] = field(default_factory=list)
    turn: int = 0

    @classmethod
    def initial(cls, m: MapGraph, start: int | None = None) -> ExplorationState:
        s = m.start if start is None else start
        return cls(s, {s}, {s, *m.neighbors(s)})

    def copy(self) -> ExplorationState:
        return ExplorationState(self.current, set(self.visited), set(self.seen), list(self.moves), self.turn)


@dataclass
class StepResult:
    state: ExplorationState
    moved: bool
    terminal: bool


def step(m: MapGraph, state: ExplorationState, action: MoveAction) -> StepResult:
    """Apply one parsed action. Invalid moves leave the position unchanged."""
    new = state.copy()
    new.turn += 1
    if action.is_done:
        return StepResult(new, False, True)
    nxt = m.exits(state.current).get(action.direction)
    if nxt is None:
        new.moves.append((action.direction, False))
        return StepResult(new, False, False)
    new.moves.append((action.direction, True))
    new.current = nxt
    new.visited.add(nxt)
    new.seen.add(nxt)
    new.seen.update(m.neighbors(nxt))
    return StepResult(new, True, False)


def ee_quality(success: bool, eff: float) -> float:
    return eff if success else 0.0


class MapWorldGame(Game):
    default_turn_limit = 20
    roles = (PLAYER_A,)

    def __init__(self, variant: str = "ee", modality: str = "text"):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if modality not in MODALITIES:
            raise ValueError(f"unknown modality {modality!r}")
        self.variant = variant
        self.modality = modality
        self.base_id = f"mapworld-{variant}"
        self.game_id = self.base_id if modality == "text" else f"{self.base_id}-mm"

    def accepts(self, instance: GameInstance) -> bool:
        return instance.game == self.base_id

    @staticmethod
    def map_of(instance: GameInstance) -> MapGraph:
        return MapGraph.from_dict(instance.payload["map"])

    # prompts

    def _images(self, m: MapGraph, node: int) -> list[str]:
        image = m.room(node).image
        return [image] if self.modality == "image" and image else []

    def initial_prompt(self, m: MapGraph) -> str:
        template = INITIAL_PROMPTS[(self.variant, self.modality)]
        values = {
            "INITIAL_ROOM": m.category(m.start),
            "INITIAL_DIRECTIONS": directions_text(m, m.start),
        }
        if self.variant == "g2x":
            goal = m.category(m.target)
            values["GOAL"] = with_article(goal) if self.modality == "text" else goal
        return fill(template, **values)

    def reply(self, m: MapGraph, result: StepResult) -> str:
        node = result.state.current
        dirs = directions_text(m, node)
        if self.modality == "image":
            return fill(IMAGE_MOVED if result.moved else IMAGE_INVALID, DIRECTIONS=dirs)
        if result.moved:
            return fill(TEXT_MOVED, ANOTHER_ROOM=with_article(m.category(node)), DIRECTIONS=dirs)
        return fill(TEXT_INVALID, SAME_ROOM=m.category(node), DIRECTIONS=dirs)

    # grammar

    def parse(self, raw: str) -> GraphAnswer:
        mm = self.modality == "image"
        if self.variant == "eegr":
            return parse_graph_answer(raw, require_graph=True, require_description=mm)
        if mm:
            return parse_graph_answer(raw, require_description=True)
        return GraphAnswer(parse_move(raw))

    # play and score

    def play(self, gm: GameMaster, instance: GameInstance) -> None:
        m = self.map_of(instance)
        if self.variant == "g2x" and m.target is None:
            raise ValueError("go-to-x instance without a target")
        state = ExplorationState.initial(m)
        prompt = self.initial_prompt(m)
        while True:
            raw = gm.ask(PLAYER_A, prompt, self._images(m, state.current))
            answer = self.parse(raw)
            result = step(m, state, answer.action)
            if result.terminal:
                return
            state = result.state
            prompt = self.reply(m, result)

    def parsed_answers(self, events: Sequence[Message]) -> list[GraphAnswer]:
        answers = []
        for msg in events:
            if msg.sender == PLAYER_A and msg.recipient == GM:
                try:
                    answers.append(self.parse(msg.content))
                except BadFormat:
                    break
        return answers

    def score(self, instance: GameInstance, events: Sequence[Message]) -> dict[str, float]:
        m = self.map_of(instance)
        answers = self.parsed_answers(events)
        trace = trace_moves(m, [a.action for a in answers])
        n = len(m.rooms)
        if self.variant == "g2x":
            success = trace.done and m.category(trace.current) == m.category(m.target)
            return {
                "success": int(success),
                "steps": trace.steps,
                "exploration": exploration(len(trace.visited), n),
                "quality": 100.0 * success,
            }
        success = trace.done and len(trace.visited) == n
        eff = efficiency_from_flags(trace.good_moves)
        metrics = {
            "success": int(success),
            "efficiency": eff,
            "exploration": exploration(len(trace.visited), n),
            "steps": trace.steps,
            "quality": ee_quality(success, eff),
        }
        if self.variant == "eegr":
            graphs = [a.graph for a in answers if a.graph is not None]
            if graphs:
                truth = LabeledGraph.induced(m, trace.visited)
                metrics["graph_similarity"] = graph_similarity(LabeledGraph.from_reported(graphs[-1]), truth)
            else:
                metrics["graph_similarity"] = 0.0
        return metrics
