"""Dialogue-game benchmark engine: games, players, instance generation, scoring."""

from .core import (
    BenchmarkResult,
    Episode,
    GameInstance,
    Message,
    aggregate,
    clemscore,
    run_benchmark,
    run_episode,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkResult",
    "Episode",
    "GameInstance",
    "Message",
    "aggregate",
    "clemscore",
    "run_benchmark",
    "run_episode",
]
