from __future__ import annotations

import json

import numpy as np
import pytest

from dialoguebench import grids
from dialoguebench.core import GM, PLAYER_A, PLAYER_B, ConfigurationError, GameInstance, run_episode
from dialoguebench.games import MapWorldGame, MatchItGame, ReferenceGame, game_for, game_for_instance
from dialoguebench.games.mapworld import ExplorationState, step
from dialoguebench.instancegen import experiments_for, generate_experiment
from dialoguebench.maps import MapGraph, Room, gen_map
from dialoguebench.parsing import DONE, MoveAction
from dialoguebench.players import ScriptedPlayer


class Script:
    """Replays a fixed list of responses; records the prompts it saw."""

    single_episode_affinity = False
    name = "script"

    def __init__(self, *responses):
        self.responses = list(responses)
        self.views = []

    def bind(self, instance, role):
        return self

    def respond(self, view):
        self.views.append(view)
        return self.responses.pop(0) if self.responses else "out of script"


# --- mapworld --------------------------------------------------------------------

def nursery_map(target=None) -> MapGraph:
    rooms = (
        Room(0, (1, 1), "Nursery", "nursery.jpg"),
        Room(1, (2, 1), "Bar", "bar.jpg"),
        Room(2, (0, 1), "Closet", "closet.jpg"),
        Room(3, (1, 0), "Bedroom", "bedroom.jpg"),
    )
    return MapGraph(rooms, frozenset({(0, 1), (0, 2), (0, 3)}), 0, target)


def map_instance(game: str, m: MapGraph) -> GameInstance:
    return GameInstance(game, "t", "0", 0, {"map": m.to_dict()})


def test_step_examples():
    m = nursery_map()
    s = ExplorationState.initial(m)
    assert s.seen == {0, 1, 2, 3}
    r = step(m, s, MoveAction("south"))
    assert r.moved and r.state.current == 3 and r.state.visited == {0, 3}
    r2 = step(m, s, MoveAction("north"))
    assert not r2.moved and r2.state.current == 0 and r2.state.moves == [("north", False)]
    r3 = step(m, s, DONE)
    assert r3.terminal and r3.state.visited == s.visited


def test_step_invariants_random_walks():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = gen_map(int(rng.integers(4, 9)), bool(rng.integers(2)), rng)
        s = ExplorationState.initial(m)
        for d in rng.choice(["north", "south", "east", "west"], 15):
            prev = s.current
            s = step(m, s, MoveAction(str(d))).state
            assert s.current == prev or s.current in m.neighbors(prev)
            assert s.seen == s.visited | {n for v in s.visited for n in m.neighbors(v)}
            assert s.current in s.visited


def test_ee_prompts_text_and_image():
    m = nursery_map()
    p = Script("GO: north", "GO: south", "DONE")
    ep = run_episode(MapWorldGame("ee"), map_instance("mapworld-ee", m), {PLAYER_A: p})
    prompts = [m_.content for m_ in ep.events if m_.sender == GM]
    assert "We are currently in the Nursery" in prompts[0] or "Nursery" in prompts[0]
    assert "east, south, west" in prompts[0]
    assert prompts[1].startswith("The move is not valid. You are still in the Nursery.")
    assert prompts[2].startswith("You have made a step and entered a Bedroom.")
    assert all(not e.attachments for e in ep.events)
    assert ep.metrics["success"] == 0 and ep.metrics["steps"] == 1 and ep.outcome.quality == 0.0

    q = Script(*[json.dumps({"description": "A room.", "action": a}) for a in ("GO: north", "GO: south", "DONE")])
    ep_mm = run_episode(MapWorldGame("ee", "image"), map_instance("mapworld-ee", m), {PLAYER_A: q})
    mm_prompts = [e for e in ep_mm.events if e.sender == GM]
    assert all("Nursery" not in e.content and "Bedroom" not in e.content for e in mm_prompts)
    assert [e.attachments for e in mm_prompts] == [("nursery.jpg",), ("nursery.jpg",), ("bedroom.jpg",)]
    assert ep_mm.game == "mapworld-ee-mm"
    assert {k: v for k, v in ep_mm.metrics.items()} == ep.metrics


def test_text_and_image_state_machines_agree():
    rng = np.random.default_rng(1)
    for _ in range(30):
        m = gen_map(6, False, rng)
        m = MapGraph(tuple(Room(r.id, r.coord, r.category, f"{r.id}.jpg") for r in m.rooms), m.edges, m.start)
        moves = [str(d) for d in rng.choice(["north", "south", "east", "west"], 8)] + ["DONE"]
        text = Script(*[a if a == "DONE" else f"GO: {a}" for a in moves])
        image = Script(*[json.dumps({"description": "x", "action": a if a == "DONE" else f"GO: {a}"}) for a in moves])
        e1 = run_episode(MapWorldGame("ee"), map_instance("mapworld-ee", m), {PLAYER_A: text})
        e2 = run_episode(MapWorldGame("ee", "image"), map_instance("mapworld-ee", m), {PLAYER_A: image})
        assert e1.metrics == e2.metrics and e1.outcome.status == e2.outcome.status


def test_ee_done_immediately_and_optimal():
    inst = map_instance("mapworld-ee", nursery_map())
    ep = run_episode(MapWorldGame("ee"), inst, {PLAYER_A: Script("DONE")})
    assert ep.outcome.played and ep.metrics["success"] == 0 and ep.metrics["efficiency"] == 0.0
    ep = run_episode(MapWorldGame("ee"), inst, {PLAYER_A: ScriptedPlayer("optimal")})
    assert ep.metrics["success"] == 1 and ep.metrics["efficiency"] == 100.0 and ep.outcome.quality == 100.0
    assert ep.metrics["exploration"] == 100.0 and ep.metrics["steps"] == 5


def test_ee_bad_format_and_turn_limit():
    inst = map_instance("mapworld-ee", nursery_map())
    ep = run_episode(MapWorldGame("ee"), inst, {PLAYER_A: Script("GO: south", "go north")})
    assert ep.outcome.reason == "bad_format" and ep.outcome.response == "go north"
    ep = run_episode(MapWorldGame("ee"), inst, {PLAYER_A: ScriptedPlayer("looper")})
    assert ep.outcome.reason == "turn_limit" and len(ep.responses(PLAYER_A)) == 20


def test_g2x():
    m = nursery_map(target=3)
    inst = map_instance("mapworld-g2x", m)
    ep = run_episode(MapWorldGame("g2x"), inst, {PLAYER_A: Script("GO: south", "DONE")})
    assert ep.metrics["success"] == 1 and ep.outcome.quality == 100.0
    assert "a Bedroom" in ep.events[0].content
    ep = run_episode(MapWorldGame("g2x"), inst, {PLAYER_A: Script("DONE")})
    assert ep.metrics["success"] == 0
    on = map_instance("mapworld-g2x", nursery_map(target=0))
    assert run_episode(MapWorldGame("g2x"), on, {PLAYER_A: Script("DONE")}).metrics["success"] == 1
    ep = run_episode(MapWorldGame("g2x"), inst, {PLAYER_A: ScriptedPlayer("looper")})
    assert ep.outcome.reason == "turn_limit" and ep.metrics["success"] == 0
    for spec in experiments_for("mapworld-g2x"):
        for i in generate_experiment(spec, 0):
            e = run_episode(MapWorldGame("g2x"), i, {PLAYER_A: ScriptedPlayer("optimal")})
            assert e.metrics["success"] == 1


def _graph_answer(action, nodes, edges=None):
    graph = {"nodes": nodes, "edges": edges or {"north": [], "south": [], "east": [], "west": []}}
    return json.dumps({"action": action, "graph": graph})


def test_eegr_empty_graph_scores_low():
    m = gen_map(6, False, np.random.default_rng(2))
    inst = map_instance("mapworld-eegr", m)
    # tour with the optimal player's moves but report nothing
    opt = run_episode(MapWorldGame("eegr"), inst, {PLAYER_A: ScriptedPlayer("optimal")})
    assert opt.metrics["graph_similarity"] == 100.0
    actions = [json.loads(r)["action"] for r in opt.responses(PLAYER_A)]
    empty = Script(*[_graph_answer(a, []) for a in actions])
    ep = run_episode(MapWorldGame("eegr"), inst, {PLAYER_A: empty})
    assert ep.metrics["success"] == 1 and ep.metrics["graph_similarity"] < 50


def test_eegr_malformed_graph_aborts():
    inst = map_instance("mapworld-eegr", nursery_map())
    ep = run_episode(MapWorldGame("eegr"), inst, {PLAYER_A: Script('{"action": "DONE", "graph": {"nodes": 3}}')})
    assert ep.outcome.reason == "bad_format"
    ep = run_episode(MapWorldGame("eegr"), inst, {PLAYER_A: Script("DONE")})
    assert ep.outcome.reason == "bad_format"


# --- reference -------------------------------------------------------------------

def reference_instance(order_b, grid=True):
    rng = np.random.default_rng(0)
    gs = [grids.render(grids.gen_grid(k, rng)) for k in ("row", "column", "diagonal")]
    payload = {"source": "grid", "grids": gs, "images": ["t.png", "d1.png", "d2.png"],
               "target_index_a": 0, "order_b": order_b}
    if not grid:
        payload.pop("grids")
    return GameInstance("reference", "row", "0", 0, payload)


@pytest.mark.parametrize("answer,order_b,quality", [
    ("Answer: second", [1, 0, 2], 100.0),
    ("Answer: first", [1, 2, 0], 0.0),
    ("Answer: Third.", [1, 2, 0], 100.0),
])
def test_reference_scoring(answer, order_b, quality):
    ep = run_episode(ReferenceGame("text"), reference_instance(order_b),
                     {PLAYER_A: Script("Expression: the row one"), PLAYER_B: Script(answer)})
    assert ep.outcome.played and ep.outcome.quality == quality


def test_reference_untagged_expression_aborts():
    b = Script("Answer: first")
    ep = run_episode(ReferenceGame("text"), reference_instance([0, 1, 2]),
                     {PLAYER_A: Script("The target is the diagonal one"), PLAYER_B: b})
    assert ep.outcome.reason == "bad_format" and ep.outcome.player == PLAYER_A
    assert not b.views


def test_reference_prompts():
    inst = reference_instance([2, 0, 1])
    a, b = Script("Expression: the row one"), Script("Answer: second")
    run_episode(ReferenceGame("text"), inst, {PLAYER_A: a, PLAYER_B: b})
    pa, pb = a.views[0].pending_prompt, b.views[0].pending_prompt
    assert "image" not in pa.content and "grid" in pa.content
    assert pa.content.index(inst.payload["grids"][0]) < pa.content.index(inst.payload["grids"][1])
    assert "Expression: the row one" in pb.content
    order = [pb.content.index(inst.payload["grids"][i]) for i in (2, 0, 1)]
    assert order == sorted(order)
    # B never sees which stimulus A was told is the target
    assert "the target" not in pb.content.lower().replace("target_expression", "")

    a, b = Script("Expression: x"), Script("Answer: first")
    run_episode(ReferenceGame("image"), inst, {PLAYER_A: a, PLAYER_B: b})
    assert a.views[0].pending_prompt.attachments == ("t.png", "d1.png", "d2.png")
    assert b.views[0].pending_prompt.attachments == ("d2.png", "t.png", "d1.png")


def test_reference_relabel_invariance():
    for perm in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
        inst = reference_instance(perm)
        pos = perm.index(0)
        ep = run_episode(ReferenceGame("text"), inst,
                         {PLAYER_A: Script("Expression: x"), PLAYER_B: Script(f"Answer: {['first', 'second', 'third'][pos]}")})
        assert ep.outcome.quality == 100.0


def test_reference_accepts():
    assert not ReferenceGame("text").accepts(reference_instance([0, 1, 2], grid=False))
    assert ReferenceGame("image").accepts(reference_instance([0, 1, 2], grid=False))


# --- matchit ---------------------------------------------------------------------

def matchit_instance(truth="different"):
    return GameInstance("matchit-ascii", "different", "0", 0, {
        "stimulus_a": "X ▢\n▢ X", "stimulus_b": "X ▢\n▢ X" if truth == "same" else "▢ X\nX ▢",
        "ground_truth": truth, "difficulty": truth, "modality": "text"})


def honest(decision, role=PLAYER_A, rounds=3):
    """Well-formed script; B opens each round with a question."""
    pair = ["ANSWER: a", "QUESTION: q"] if role == PLAYER_A else ["QUESTION: q", "ANSWER: a"]
    return ["DESCRIPTION: d"] + pair * rounds + [f"DECISION: {decision}"]


@pytest.mark.parametrize("da,db,truth,quality", [
    ("different images", "different images", "different", 100.0),
    ("same image", "different images", "different", 0.0),
    ("same image", "same image", "same", 100.0),
])
def test_matchit_scoring(da, db, truth, quality):
    ep = run_episode(MatchItGame("text"), matchit_instance(truth),
                     {PLAYER_A: Script(*honest(da)), PLAYER_B: Script(*honest(db, PLAYER_B))})
    assert ep.outcome.played and ep.outcome.quality == quality


def test_matchit_turn_order_and_relay_fidelity():
    a = Script("  DESCRIPTION: two Xs on the diagonal\n", "ANSWER: a1", "QUESTION: qa1", "ANSWER: a2",
               "QUESTION: qa2", "ANSWER: a3", "QUESTION: qa3", "DECISION: different images")
    b = Script("DESCRIPTION: anti-diagonal", "QUESTION: qb1", "ANSWER: b1", "QUESTION: qb2", "ANSWER: b2",
               "QUESTION: qb3", "ANSWER: b3", "DECISION: different images")
    ep = run_episode(MatchItGame("text"), matchit_instance(), {PLAYER_A: a, PLAYER_B: b})
    assert ep.outcome.played and len([e for e in ep.events if e.recipient == GM]) == 16
    senders = [e.sender for e in ep.events if e.recipient == GM]
    assert senders[:2] == [PLAYER_A, PLAYER_B] and senders[2] == PLAYER_B and senders[-2:] == [PLAYER_B, PLAYER_A]
    relays = [(e.sender, e.recipient, e.content) for e in ep.events if GM not in (e.sender, e.recipient)]
    assert relays[0] == (PLAYER_A, PLAYER_B, "DESCRIPTION: two Xs on the diagonal")
    assert (PLAYER_B, PLAYER_A, "QUESTION: qb1") in relays
    assert (PLAYER_A, PLAYER_B, "ANSWER: a1") in relays
    # A's view never holds B's stimulus
    assert all("▢ X\nX ▢" not in v.pending_prompt.content for v in a.views)


def test_matchit_abort_skips_decisions():
    b = Script("DESCRIPTION: x", "question?")
    ep = run_episode(MatchItGame("text"), matchit_instance(),
                     {PLAYER_A: Script(*honest("different images")), PLAYER_B: b})
    assert ep.outcome.reason == "bad_format" and ep.outcome.player == PLAYER_B
    assert ep.metrics["success"] == 0


def test_matchit_explained_decision_aborts():
    ep = run_episode(MatchItGame("text"), matchit_instance(), {
        PLAYER_A: Script(*honest("different images")),
        PLAYER_B: Script(*honest("I am fairly sure these are different images", PLAYER_B))})
    assert ep.outcome.reason == "bad_format"


def test_matchit_oracles_score_100():
    for spec in experiments_for("matchit-ascii") + experiments_for("matchit"):
        for inst in generate_experiment(spec, 0):
            game = game_for_instance(inst)
            ep = run_episode(game, inst, {PLAYER_A: ScriptedPlayer("oracle"), PLAYER_B: ScriptedPlayer("oracle")})
            assert ep.outcome.quality == 100.0, (spec.experiment, inst.instance_id)


def test_matchit_config():
    assert MatchItGame("text", max_qa_rounds=1).default_turn_limit == 8
    with pytest.raises(ValueError):
        MatchItGame("text", max_qa_rounds=0)


# --- registry ------------------------------------------------------------------------

@pytest.mark.parametrize("game_id", ["reference", "reference-text", "matchit", "matchit-ascii",
                                     "mapworld-ee", "mapworld-eegr-mm", "mapworld-g2x"])
def test_game_for_roundtrip(game_id):
    assert game_for(game_id).game_id == game_id


@pytest.mark.parametrize("game_id", ["mapworld-xx", "mapworld-ee-hd", "tetris"])
def test_game_for_unknown(game_id):
    with pytest.raises(ConfigurationError):
        game_for(game_id)


def test_game_for_instance_modalities():
    grid = reference_instance([0, 1, 2])
    assert game_for_instance(grid).game_id == "reference-text"
    assert game_for_instance(grid, "image").game_id == "reference"
    with pytest.raises(ConfigurationError):
        game_for_instance(reference_instance([0, 1, 2], grid=False), "text")
    with pytest.raises(ConfigurationError):
        game_for_instance(grid, "braille")
