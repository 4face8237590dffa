"""Command line: generate instances, run players, score transcripts, build leaderboards.

Exit codes: 0 ok, 1 usage or configuration error, 2 infrastructure failure
during a run, 3 scoring finished but some files were skipped.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from . import instancegen
from .core import (
    PLAYER_A,
    PLAYER_B,
    BenchmarkResult,
    ConfigurationError,
    Episode,
    InfrastructureError,
    aggregate,
    load_episode,
    rescore,
    round2,
    run_benchmark,
    save_result,
)
from .games import MODALITIES, game_for, game_for_instance
from .metrics import build_leaderboard
from .players import resolve_player

EXIT_OK, EXIT_USAGE, EXIT_INFRA, EXIT_PARTIAL = 0, 1, 2, 3

logger = logging.getLogger("dialoguebench")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; 2 is reserved for infrastructure failures here."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(out_default: str) -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    p.add_argument("--out", default=out_default, help=f"output directory (default {out_default})")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel episodes")
    p.add_argument("--turn-limit", type=int, default=None, help="override the per-game turn limit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialoguebench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[_common("instances")], help="write instance files")
    g.add_argument("game", help=f"one of {', '.join(instancegen.GAMES)} or 'all'")
    g.add_argument("--experiment", help="only this experiment")
    g.add_argument("--manifest", help="JSON stimulus manifest overriding the placeholder one")

    r = sub.add_parser("run", parents=[_common("results")], help="play instances")
    r.add_argument("instances", nargs="+", help="instance files or directories")
    r.add_argument("--player-a", required=True, help="scripted:<name> | human | remote:<config.json>")
    r.add_argument("--player-b", help="player B spec (default: same as player A)")
    r.add_argument("--game", help="only instances of this game")
    r.add_argument("--experiment", help="only instances of this experiment")
    r.add_argument("--modality", choices=MODALITIES, default="auto")
    r.add_argument("--player-id", help="results sub-directory (default: derived from player names)")

    s = sub.add_parser("score", parents=[_common("")], help="rescore episodes from transcripts")
    s.add_argument("results", help="results directory (containing <player-id>/ folders)")

    lb = sub.add_parser("leaderboard", parents=[_common(".")], help="rank score files")
    lb.add_argument("scores", nargs="+", help="scores.json files")
    return parser


# --- generate ------------------------------------------------------------------

def cmd_generate(args) -> int:
    manifest = instancegen.load_manifest(args.manifest)
    games = instancegen.GAMES if args.game == "all" else (args.game,)
    written = []
    for game in games:
        for spec in instancegen.experiments_for(game, args.experiment):
            written.append(instancegen.write_experiment(args.out, spec, args.seed, manifest))
    for path in written:
        print(path)
    return EXIT_OK


# --- run ------------------------------------------------------------------------

def _instance_files(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.rglob("*.json")))
        elif p.is_file():
            files.append(p)
        else:
            raise ConfigurationError(f"no such instance file or directory: {p}")
    return files


def cmd_run(args) -> int:
    a = resolve_player(args.player_a, args.seed)
    b = resolve_player(args.player_b, args.seed) if args.player_b else a
    players = {PLAYER_A: a, PLAYER_B: b}
    suite: dict[str, tuple] = {}
    for path in _instance_files(args.instances):
        for inst in instancegen.read_instances(path):
            if args.game and inst.game != args.game:
                continue
            if args.experiment and inst.experiment != args.experiment:
                continue
            game = game_for_instance(inst, args.modality)
            suite.setdefault(game.game_id, (game, []))[1].append(inst)
    if not suite:
        raise ConfigurationError("no instances selected")
    result, episodes = run_benchmark(
        [suite[k] for k in sorted(suite)], players, args.turn_limit, args.out,
        max(1, args.jobs), args.player_id,
    )
    counts = Counter((e.game, e.outcome.status) for e in episodes)
    for game_id in sorted(suite):
        print(f"{game_id}: {counts[(game_id, 'played')]} played, {counts[(game_id, 'aborted')]} aborted")
    print(f"clemscore {round2(result.clemscore)} -> {Path(args.out) / result.model}")
    return EXIT_OK


# --- score ----------------------------------------------------------------------

def score_dir(results: Path) -> tuple[list[BenchmarkResult], int]:
    """Rescore every episode under ``results``; returns results and skipped-file count."""
    player_dirs = sorted(d for d in results.iterdir() if d.is_dir()) if results.is_dir() else []
    out, skipped = [], 0
    for pdir in player_dirs:
        by_game: dict[str, list[Episode]] = {}
        for path in sorted(pdir.glob("*/*/*.json")):
            if path.name.endswith(".score.json"):
                continue
            try:
                ep = load_episode(path)
                game = game_for(ep.game)
                ep.metrics = rescore(game, ep)
            except (OSError, ValueError, KeyError, TypeError, ConfigurationError) as exc:
                logger.warning("skipping %s: %s", path, exc)
                skipped += 1
                continue
            if ep.outcome.played:
                ep.outcome.quality = ep.metrics["quality"]
            path.with_name(path.stem + ".score.json").write_text(
                json.dumps(ep.metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            by_game.setdefault(ep.game, []).append(ep)
        if by_game:
            result = aggregate(by_game, model=pdir.name)
            save_result(pdir / "scores.json", result)
            out.append(result)
    return out, skipped


def cmd_score(args) -> int:
    results, skipped = score_dir(Path(args.results))
    if not results:
        raise ConfigurationError(f"no episodes found under {args.results}")
    for r in results:
        print(f"{r.model}: clemscore {round2(r.clemscore)} "
              f"(avg %p {round2(r.avg_played)}, avg ql {round2(r.avg_quality)})")
    if skipped:
        print(f"{skipped} file(s) skipped", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- leaderboard ----------------------------------------------------------------

def cmd_leaderboard(args) -> int:
    results = []
    for path in map(Path, args.scores):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            result = BenchmarkResult.from_dict(doc)
        except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            continue
        if not result.model:
            result.model = path.parent.name
        results.append(result)
    if not results:
        raise ConfigurationError("no readable score files")
    try:
        board = build_leaderboard(results)
    except ValueError as exc:
        raise ConfigurationError(f"{exc}; give every model a distinct id") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "leaderboard.txt").write_text(board.to_text(), encoding="utf-8")
    (out / "leaderboard.csv").write_text(board.to_csv(), encoding="utf-8")
    print(board.to_text(), end="")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "score": cmd_score, "leaderboard": cmd_leaderboard}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfrastructureError as exc:
        print(f"infrastructure failure: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
