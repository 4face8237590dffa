"""
A leaderboard from scripted players
===================================

Generate the full instance suite, let a few scripted policies play it, and
rank them. The clemscore is the average %played across games times the
average quality, divided by 100.
"""

import tempfile
from pathlib import Path

from dialoguebench.core import PLAYER_A, PLAYER_B, round2, run_benchmark
from dialoguebench.games import game_for_instance
from dialoguebench.instancegen import EXPERIMENTS, generate_experiment
from dialoguebench.metrics import build_leaderboard
from dialoguebench.players import ScriptedPlayer

# group instances by the game that will play them (grid references play as text)
suite = {}
for spec in EXPERIMENTS:
    for inst in generate_experiment(spec, seed=0):
        game = game_for_instance(inst)
        suite.setdefault(game.game_id, (game, []))[1].append(inst)
print({k: len(v[1]) for k, v in suite.items()})

# the oracle plays everything; the stopper only makes sense on the maps
out = Path(tempfile.mkdtemp())
results = []
for policy in ("oracle", "format_violator"):
    player = ScriptedPlayer(policy)
    result, _ = run_benchmark(list(suite.values()), {PLAYER_A: player, PLAYER_B: player}, out_dir=out)
    results.append(result)

maps_only = [v for k, v in suite.items() if k.startswith("mapworld")]
for policy in ("stopper", "random_mover"):
    result, _ = run_benchmark(maps_only, {PLAYER_A: ScriptedPlayer(policy, seed=0)}, out_dir=out)
    results.append(result)

for r in results:
    print(r.model, round2(r.clemscore), round2(r.avg_played), round2(r.avg_quality))

# the same table the CLI writes to leaderboard.txt
print(build_leaderboard(results).to_text())
print("episodes written under", out)
