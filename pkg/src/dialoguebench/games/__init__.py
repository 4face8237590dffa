"""Game definitions and lookup by id."""

from __future__ import annotations

from ..core import ConfigurationError, Game, GameInstance
from .mapworld import MapWorldGame
from .matchit import MatchItGame
from .reference import ReferenceGame

MODALITIES = ("auto", "text", "image")


def game_for(game_id: str) -> Game:
    """Rebuild a game from the id recorded in an episode."""
    if game_id == "reference":
        return ReferenceGame("image")
    if game_id == "reference-text":
        return ReferenceGame("text")
    if game_id == "matchit":
        return MatchItGame("image")
    if game_id == "matchit-ascii":
        return MatchItGame("text")
    if game_id.startswith("mapworld-"):
        variant, _, mm = game_id[len("mapworld-"):].partition("-")
        if mm in ("", "mm"):
            try:
                return MapWorldGame(variant, "image" if mm else "text")
            except ValueError:
                pass
    raise ConfigurationError(f"unknown game id {game_id!r}")


def game_for_instance(instance: GameInstance, modality: str = "auto") -> Game:
    """Pick the game that plays ``instance`` in the requested presentation.

    ``auto`` uses text wherever the stimuli have a text rendering.
    """
    if modality not in MODALITIES:
        raise ConfigurationError(f"unknown modality {modality!r}")
    g = instance.game
    if g == "reference":
        text = modality == "text" or (modality == "auto" and bool(instance.payload.get("grids")))
        game: Game = ReferenceGame("text" if text else "image")
    elif g == "matchit-ascii":
        game = MatchItGame("text")
    elif g == "matchit":
        game = MatchItGame("image")
    elif g.startswith("mapworld-"):
        game = MapWorldGame(g[len("mapworld-"):], "image" if modality == "image" else "text")
    else:
        raise ConfigurationError(f"unknown game {g!r}")
    if not game.accepts(instance):
        raise ConfigurationError(f"{game.game_id} cannot play {g}/{instance.experiment} in {modality} mode")
    return game


__all__ = ["MapWorldGame", "MatchItGame", "ReferenceGame", "game_for", "game_for_instance"]
