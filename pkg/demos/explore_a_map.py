"""
Exploring a map and scoring the walk
====================================

Generate a small room map, let two scripted explorers loose on it, and
look at which of their moves count as efficient.
"""

import numpy as np

from dialoguebench.core import PLAYER_A, GameInstance, run_episode
from dialoguebench.games import MapWorldGame
from dialoguebench.games.mapworld import ExplorationState, step
from dialoguebench.maps import gen_map
from dialoguebench.metrics import trace_moves
from dialoguebench.parsing import parse_move
from dialoguebench.players import ScriptedPlayer

# a six-room tree on the square lattice; rooms carry scene categories
m = gen_map(6, cycle=False, rng=np.random.default_rng(42))
for room in m.rooms:
    print(room.id, room.coord, room.category, sorted(m.exits(room.id)))
print("start:", m.category(m.start))

# an instance is just the serialized map plus bookkeeping
instance = GameInstance("mapworld-ee", "demo", "0", 42, {"map": m.to_dict()})
game = MapWorldGame("ee")

# the optimal explorer follows a shortest covering walk and stops when done
optimal = run_episode(game, instance, {PLAYER_A: ScriptedPlayer("optimal")})
print("\noptimal:", optimal.responses(PLAYER_A))
print(optimal.metrics)

# a random mover picks any direction (or DONE) at random
wander = run_episode(game, instance, {PLAYER_A: ScriptedPlayer("random_mover", seed=7)})
print("\nrandom:", wander.outcome.status, wander.outcome.reason or "", wander.metrics)

# replaying its moves shows which ones lie on some shortest covering walk;
# moves into walls are rejected by the environment and get no flag
moves = [parse_move(r) for r in wander.responses(PLAYER_A)]
flags = iter(trace_moves(m, moves).good_moves)
state = ExplorationState.initial(m)
for action in moves:
    result = step(m, state, action)
    valid = result.moved or result.terminal
    verdict = ("good" if next(flags) else "wasted") if valid else "wall"
    print(f"  {action.serialize():10s} {verdict}")
    state = result.state
    if result.terminal:
        break
print("visited", len(state.visited), "of", len(m.rooms), "rooms")
