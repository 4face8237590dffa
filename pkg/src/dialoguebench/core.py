"""Game-agnostic engine: players, the game-master turn loop, episodes, scoring."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

from .parsing import BadFormat

logger = logging.getLogger(__name__)

GM = "GM"
PLAYER_A = "PlayerA"
PLAYER_B = "PlayerB"

PLAYED = "played"
ABORTED = "aborted"

GENERATOR_VERSION = "1"


class ConfigurationError(Exception):
    """Bad setup (missing role, unknown id, unset credentials); never an in-game abort."""


class InfrastructureError(Exception):
    """A player could not produce a response at all (transport, API failure)."""


class IntegrityError(Exception):
    """An episode does not fit the instance it claims to belong to."""


class TurnLimitReached(Exception):
    pass


@dataclass(frozen=True)
class Message:
    sender: str
    recipient: str
    content: str
    attachments: tuple[str, ...] = ()
    turn_index: int = 0

    def to_dict(self) -> dict:
        return {
            "turn": self.turn_index,
            "from": self.sender,
            "to": self.recipient,
            "text": self.content,
            "images": list(self.attachments),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Message:
        return cls(d["from"], d["to"], d["text"], tuple(d.get("images", ())), d["turn"])


@dataclass(frozen=True)
class GameInstance:
    game: str
    experiment: str
    instance_id: str
    seed: int
    payload: dict

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "experiment": self.experiment,
            "instance_id": self.instance_id,
            "seed": self.seed,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> GameInstance:
        return cls(d["game"], d["experiment"], str(d["instance_id"]), int(d["seed"]), d["payload"])


@dataclass
class Outcome:
    status: str
    quality: float | None = None
    reason: str | None = None
    player: str | None = None
    response: str | None = None
    detail: str | None = None

    @property
    def played(self) -> bool:
        return self.status == PLAYED

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"status": self.status}
        for key in ("quality", "reason", "player", "response", "detail"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> Outcome:
        return cls(
            d["status"], d.get("quality"), d.get("reason"), d.get("player"),
            d.get("response"), d.get("detail"),
        )


@dataclass
class Episode:
    game: str
    instance: GameInstance
    events: list[Message]
    outcome: Outcome
    metrics: dict[str, float] = field(default_factory=dict)

    @property
    def instance_ref(self) -> str:
        return self.instance.instance_id

    def responses(self, role: str) -> list[str]:
        return [m.content for m in self.events if m.sender == role and m.recipient == GM]

    def to_dict(self) -> dict:
        return {
            "instance_ref": self.instance_ref,
            "game": self.game,
            "experiment": self.instance.experiment,
            "events": [m.to_dict() for m in self.events],
            "outcome": self.outcome.to_dict(),
            "metrics": self.metrics,
            "instance": self.instance.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> Episode:
        return cls(
            d["game"],
            GameInstance.from_dict(d["instance"]),
            [Message.from_dict(e) for e in d["events"]],
            Outcome.from_dict(d["outcome"]),
            dict(d.get("metrics", {})),
        )


@dataclass(frozen=True)
class PlayerTranscriptView:
    """What one player may see: its own lane of the dialogue plus the pending prompt."""

    history: tuple[Message, ...]
    pending_prompt: Message


class Player(Protocol):
    name: str
    single_episode_affinity: bool

    def bind(self, instance: GameInstance, role: str) -> Player: ...

    def respond(self, view: PlayerTranscriptView) -> str: ...


class GameMaster:
    """Records the dialogue and enforces the turn limit for one episode.

    A turn is one player response, accepted or rejected.
    """

    def __init__(self, players: Mapping[str, Player], turn_limit: int):
        self.players = players
        self.turn_limit = turn_limit
        self.events: list[Message] = []
        self.turns = 0

    def _append(self, sender: str, recipient: str, content: str, images=()) -> Message:
        msg = Message(sender, recipient, content, tuple(images), len(self.events))
        self.events.append(msg)
        return msg

    def view_for(self, role: str) -> tuple[Message, ...]:
        return tuple(m for m in self.events if role in (m.sender, m.recipient))

    def ask(self, role: str, prompt: str, images: Sequence[str] = ()) -> str:
        if self.turns >= self.turn_limit:
            raise TurnLimitReached()
        history = self.view_for(role)
        pending = self._append(GM, role, prompt, images)
        response = self.players[role].respond(PlayerTranscriptView(history, pending))
        if not isinstance(response, str):
            raise InfrastructureError(f"{role} returned {type(response).__name__}, not text")
        self._append(role, GM, response)
        self.turns += 1
        return response

    def relay(self, sender: str, recipient: str, content: str) -> None:
        self._append(sender, recipient, content)


class Game:
    """Base class for a game definition.

    Subclasses set ``game_id``/``roles``/``default_turn_limit`` and implement
    ``play`` (drive the dialogue via the game master, raising ``BadFormat`` on
    the first malformed response) and ``score`` (recompute metrics purely from
    the recorded events).
    """

    game_id: str = ""
    roles: tuple[str, ...] = (PLAYER_A,)
    default_turn_limit: int = 20

    def accepts(self, instance: GameInstance) -> bool:
        return instance.game == self.game_id

    def play(self, gm: GameMaster, instance: GameInstance) -> None:
        raise NotImplementedError

    def score(self, instance: GameInstance, events: Sequence[Message]) -> dict[str, float]:
        raise NotImplementedError


def run_episode(
    game: Game,
    instance: GameInstance,
    players: Mapping[str, Player],
    turn_limit: int | None = None,
) -> Episode:
    missing = [r for r in game.roles if r not in players]
    if missing:
        raise ConfigurationError(f"{game.game_id} needs players for roles {missing}")
    if not game.accepts(instance):
        raise ConfigurationError(f"instance {instance.instance_id} belongs to {instance.game}")
    limit = game.default_turn_limit if turn_limit is None else turn_limit
    if limit < 1:
        raise ConfigurationError("turn_limit must be positive")

    bound = {role: players[role].bind(instance, role) for role in game.roles}
    gm = GameMaster(bound, limit)
    try:
        game.play(gm, instance)
    except BadFormat as exc:
        last = gm.events[-1]
        outcome = Outcome(ABORTED, reason="bad_format", player=last.sender,
                          response=last.content, detail=str(exc))
    except TurnLimitReached:
        outcome = Outcome(ABORTED, reason="turn_limit", detail=f"{gm.turns} turns")
    else:
        outcome = Outcome(PLAYED)
    metrics = game.score(instance, gm.events)
    if outcome.played:
        outcome.quality = metrics["quality"]
    else:
        metrics.pop("quality", None)
    return Episode(game.game_id, instance, gm.events, outcome, metrics)


def rescore(game: Game, episode: Episode) -> dict[str, float]:
    metrics = game.score(episode.instance, episode.events)
    if not episode.outcome.played:
        metrics.pop("quality", None)
    return metrics


# --- aggregation -----------------------------------------------------------

@dataclass
class GameSummary:
    n: int
    played: int
    percent_played: float
    avg_quality: float | None

    def to_dict(self) -> dict:
        return {
            "percent_played": self.percent_played,
            "avg_quality": self.avg_quality,
            "n": self.n,
            "played": self.played,
        }


@dataclass
class BenchmarkResult:
    per_game: dict[str, GameSummary]
    clemscore: float
    model: str = ""

    @property
    def avg_played(self) -> float:
        return mean_or_zero([g.percent_played for g in self.per_game.values()])

    @property
    def avg_quality(self) -> float:
        return mean_or_zero([g.avg_quality for g in self.per_game.values() if g.avg_quality is not None])

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "games": {k: v.to_dict() for k, v in sorted(self.per_game.items())},
            "clemscore": self.clemscore,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> BenchmarkResult:
        games = {
            k: GameSummary(int(v["n"]), int(v.get("played", round(v["n"] * v["percent_played"] / 100))),
                           float(v["percent_played"]),
                           None if v["avg_quality"] is None else float(v["avg_quality"]))
            for k, v in d["games"].items()
        }
        return cls(games, float(d["clemscore"]), str(d.get("model", "")))


def mean_or_zero(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def clemscore(avg_percent_played: float, avg_quality: float) -> float:
    return avg_percent_played * avg_quality / 100.0


def round2(x: float) -> str:
    """Round half-up to two decimals for display."""
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def summarize_game(episodes: Iterable[Episode]) -> GameSummary:
    episodes = list(episodes)
    n = len(episodes)
    qualities = [e.outcome.quality for e in episodes if e.outcome.played]
    played = len(qualities)
    return GameSummary(
        n=n,
        played=played,
        percent_played=100.0 * played / n if n else 0.0,
        avg_quality=sum(qualities) / played if played else None,
    )


def aggregate(episodes_by_game: Mapping[str, Iterable[Episode]], model: str = "") -> BenchmarkResult:
    """Micro-average within a game, macro-average over games.

    A game with no played episode has no quality and is left out of the
    quality average, but its 0 %played still counts.
    """
    per_game = {g: summarize_game(eps) for g, eps in episodes_by_game.items()}
    result = BenchmarkResult(per_game, 0.0, model)
    result.clemscore = clemscore(result.avg_played, result.avg_quality)
    return result


# --- persistence -----------------------------------------------------------

def episode_path(root: str | os.PathLike, player_id: str, game_id: str, instance: GameInstance) -> Path:
    return Path(root) / player_id / game_id / instance.experiment / f"{instance.instance_id}.json"


def save_episode(root, player_id: str, episode: Episode) -> Path:
    path = episode_path(root, player_id, episode.game, episode.instance)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(episode.to_json(), encoding="utf-8")
    return path


def load_episode(path: str | os.PathLike) -> Episode:
    return Episode.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_result(path: str | os.PathLike, result: BenchmarkResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def players_id(players: Mapping[str, Player], roles: Sequence[str]) -> str:
    names = [players[r].name for r in roles if r in players]
    return "--".join(dict.fromkeys(names)) if names else "anonymous"


def run_benchmark(
    suite: Sequence[tuple[Game, Sequence[GameInstance]]],
    players: Mapping[str, Player],
    turn_limit: int | None = None,
    out_dir: str | os.PathLike | None = None,
    jobs: int = 1,
    player_id: str | None = None,
) -> tuple[BenchmarkResult, list[Episode]]:
    """Play every instance of every game; persist episodes and the result if ``out_dir``."""
    if not suite:
        raise ConfigurationError("empty suite")
    for game, _ in suite:
        missing = [r for r in game.roles if r not in players]
        if missing:
            raise ConfigurationError(f"{game.game_id} needs players for roles {missing}")
    if any(getattr(p, "single_episode_affinity", False) for p in players.values()):
        jobs = 1
    roles = sorted({r for game, _ in suite for r in game.roles})
    pid = player_id or players_id(players, roles)

    tasks = [(game, inst) for game, instances in suite for inst in instances]

    def _play(task):
        game, inst = task
        return run_episode(game, inst, players, turn_limit)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            episodes = list(pool.map(_play, tasks))
    else:
        episodes = [_play(t) for t in tasks]

    by_game: dict[str, list[Episode]] = {}
    for (game, _), ep in zip(tasks, episodes):
        by_game.setdefault(game.game_id, []).append(ep)
    result = aggregate(by_game, model=pid)
    if out_dir is not None:
        for ep in episodes:
            save_episode(out_dir, pid, ep)
        save_result(Path(out_dir) / pid / "scores.json", result)
    return result, episodes
