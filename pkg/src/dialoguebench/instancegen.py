"""Procedural generation of every benchmark instance file.

All randomness flows from one integer seed: each experiment derives its own
stream from ``(seed, game, experiment)``, and each instance records the seed
of the generator that produced it. Image stimuli are opaque path strings
taken from a manifest; a synthetic placeholder manifest ships so the whole
suite can be generated and played without any image corpus.
"""

from __future__ import annotations

import json
import math
import os
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import grids
from .core import GENERATOR_VERSION, ConfigurationError, GameInstance
from .maps import ROOM_CATEGORIES, MapGenerationError, assign_images, gen_map, select_g2x_endpoints

REFERENCE_GRID_EXPERIMENTS = grids.GRID_KINDS
REFERENCE_PHOTO_EXPERIMENTS = ("ade", "docci", "clevr", "pentomino")
REFERENCE_STATIC_EXPERIMENTS = ("ade_static", "docci_static", "clevr_static")
# fixed target category for the static-target sets
STATIC_CATEGORY = {"ade": "bedroom", "docci": "dog", "clevr": "sphere"}

MATCHIT_GRID_KINDS = ("diagonal", "letter", "shape")


@dataclass(frozen=True)
class ExperimentSpec:
    game: str
    experiment: str
    params: dict = field(default_factory=dict)
    n_instances: int = 10

    def seed_for(self, seed: int) -> int:
        """Experiment-level seed, stable across runs and platforms."""
        tag = zlib.crc32(f"{self.game}/{self.experiment}".encode())
        return int(np.random.SeedSequence([seed, tag]).generate_state(1, np.uint32)[0])


def _specs() -> list[ExperimentSpec]:
    specs = []
    for kind in REFERENCE_GRID_EXPERIMENTS:
        specs.append(ExperimentSpec("reference", kind, {"source": "grid", "kind": kind}, 30))
    for name in REFERENCE_PHOTO_EXPERIMENTS:
        specs.append(ExperimentSpec("reference", name, {"source": name}, 30))
    for name in REFERENCE_STATIC_EXPERIMENTS:
        base = name.removesuffix("_static")
        specs.append(ExperimentSpec("reference", name, {"source": base, "static": STATIC_CATEGORY[base]}, 30))
    for diff in ("same", "similar_transform", "similar_edit2", "different"):
        specs.append(ExperimentSpec("matchit-ascii", diff, {"difficulty": diff}))
    for source in ("photo", "pentomino"):
        for diff in ("same", "similar", "different"):
            specs.append(ExperimentSpec("matchit", f"{source}_{diff}", {"source": source, "difficulty": diff}))
    sizes = {"small": 4, "medium": 6, "large": 8}
    for name, n in sizes.items():
        specs.append(ExperimentSpec("mapworld-ee", name, {"n_rooms": n, "cycle": False}))
    for name in ("medium", "large"):
        specs.append(ExperimentSpec("mapworld-ee", f"{name}_cycle", {"n_rooms": sizes[name], "cycle": True}))
    for name, n in sizes.items():
        specs.append(ExperimentSpec("mapworld-eegr", name, {"n_rooms": n, "cycle": False}))
    for bucket in ("on", "close", "far"):
        specs.append(ExperimentSpec("mapworld-g2x", bucket, {"n_rooms": 8, "cycle": False, "bucket": bucket}))
    return specs


EXPERIMENTS: tuple[ExperimentSpec, ...] = tuple(_specs())
GAMES: tuple[str, ...] = tuple(dict.fromkeys(s.game for s in EXPERIMENTS))


def experiments_for(game: str, experiment: str | None = None) -> list[ExperimentSpec]:
    specs = [s for s in EXPERIMENTS if s.game == game]
    if not specs:
        raise ConfigurationError(f"unknown game {game!r}; known: {', '.join(GAMES)}")
    if experiment is not None:
        specs = [s for s in specs if s.experiment == experiment]
        if not specs:
            raise ConfigurationError(f"unknown experiment {experiment!r} for {game}")
    return specs


# --- manifests ---------------------------------------------------------------

def placeholder_manifest(seed: int = 0) -> dict:
    """Synthetic stimulus manifest: plausible paths plus label annotations.

    Photo datasets map a category to file paths. The MatchIt pools give each
    image a label set; images in one cluster share all but one label, so
    cluster-mates are "similar" and images in different clusters rarely
    share any label.
    """
    rng = np.random.default_rng(seed)
    categories = {
        "ade": ["bedroom", "kitchen", "bathroom", "living_room", "office", "street"],
        "docci": ["dog", "cat", "tree", "car", "flower", "building"],
        "clevr": ["sphere", "cube", "cylinder", "mixed_small", "mixed_large", "single"],
        "pentomino": ["board_a", "board_b", "board_c", "board_d", "board_e", "board_f"],
    }
    manifest: dict[str, Any] = {}
    for dataset, cats in categories.items():
        manifest[dataset] = {c: [f"{dataset}/{c}/{c}_{k:03d}.jpg" for k in range(8)] for c in cats}

    def pool(prefix: str, clusters: int, per_cluster: int, vocab: int, size: int) -> dict:
        out = {}
        for c in range(clusters):
            base = rng.choice(vocab, size=size + per_cluster, replace=False)
            for k in range(per_cluster):
                labels = list(base[:size])
                labels[int(rng.integers(size))] = base[size + k]
                out[f"{prefix}/{c:03d}_{k}.jpg"] = sorted(f"label{int(x)}" for x in labels)
        return out

    manifest["matchit_photo"] = pool("visual_genome", 30, 4, 400, 10)
    manifest["matchit_pentomino"] = pool("pentomino_boards", 30, 4, 400, 10)
    manifest["rooms"] = {c: [f"ade20k/rooms/{c.lower().replace(' ', '_')}_{k}.jpg" for k in range(3)]
                         for c in ROOM_CATEGORIES}
    return manifest


def load_manifest(path: str | os.PathLike | None, seed: int = 0) -> dict:
    """A user manifest overrides the placeholder entry by entry."""
    manifest = placeholder_manifest(seed)
    if path is not None:
        manifest.update(json.loads(Path(path).read_text(encoding="utf-8")))
    return manifest


# --- MatchIt photo pairing ----------------------------------------------------

@dataclass(frozen=True)
class PairThresholds:
    different_max_jaccard: float = 0.05
    similar_min_jaccard: float = 0.22
    similar_min_score: float = 0.8


def jaccard(a: Iterable, b: Iterable) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def label_cosine(a: Sequence[str], b: Sequence[str]) -> float:
    """Cosine of binary label vectors; a stand-in for an embedding scorer."""
    a, b = set(a), set(b)
    return len(a & b) / math.sqrt(len(a) * len(b)) if a and b else 0.0


def pair_matchit_photos(
    annotations: Mapping[str, Sequence[str] | None],
    scorer: Callable[[str, str], float],
    thresholds: PairThresholds = PairThresholds(),
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Candidate (different, similar) pairs for manual curation.

    Different pairs come lowest-Jaccard first. ``scorer`` receives image ids.
    """
    usable = {}
    for image, labels in sorted(annotations.items()):
        if not labels:
            warnings.warn(f"skipping {image}: no annotations", stacklevel=2)
            continue
        usable[image] = set(labels)
    ids = sorted(usable)
    different, similar = [], []
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            j = jaccard(usable[a], usable[b])
            if j <= thresholds.different_max_jaccard:
                different.append((j, a, b))
            elif j >= thresholds.similar_min_jaccard and scorer(a, b) >= thresholds.similar_min_score:
                similar.append((a, b))
    different.sort()
    return [(a, b) for _, a, b in different], similar


# --- per-game generators ------------------------------------------------------

def _distinct_grids(kind: str, target: np.ndarray, rng: np.random.Generator, k: int = 2) -> list[np.ndarray]:
    """``k`` same-kind grids unlike the target and each other.

    Kinds with few members (two diagonals) are topped up with two-cell
    edits of the target.
    """
    chosen: list[np.ndarray] = []
    taken = [target]
    for _ in range(50):
        if len(chosen) == k:
            break
        g = grids.gen_grid(kind, rng)
        if not any(np.array_equal(g, t) for t in taken):
            chosen.append(g)
            taken.append(g)
    while len(chosen) < k:
        g = grids.edit_distance_two(target, rng)
        if not any(np.array_equal(g, t) for t in taken):
            chosen.append(g)
            taken.append(g)
    return chosen


def reference_payload(spec: ExperimentSpec, rng: np.random.Generator, manifest: Mapping, index: int) -> dict:
    p = spec.params
    order_b = [int(i) for i in rng.permutation(3)]
    if p["source"] == "grid":
        target = grids.gen_grid(p["kind"], rng)
        stimuli = [target] + _distinct_grids(p["kind"], target, rng)
        rendered = [grids.render(g) for g in stimuli]
        images = [f"grids/{spec.experiment}/{index:03d}_{k}.png" for k in range(3)]
        return {"source": "grid", "grids": rendered, "images": images,
                "target_index_a": 0, "order_b": order_b}
    catalog = manifest[p["source"]]
    if "static" in p:
        category = p["static"]
        paths = list(catalog[category])
        target = paths[0]
        picks = rng.choice(len(paths) - 1, size=2, replace=False) + 1
        images = [target] + [paths[int(i)] for i in picks]
    else:
        cats = sorted(catalog)
        category = cats[int(rng.integers(len(cats)))]
        paths = list(catalog[category])
        picks = rng.choice(len(paths), size=3, replace=False)
        images = [paths[int(i)] for i in picks]
    return {"source": p["source"], "category": category, "images": images,
            "target_index_a": 0, "order_b": order_b}


def matchit_ascii_payload(spec: ExperimentSpec, rng: np.random.Generator) -> dict:
    diff = spec.params["difficulty"]
    kind = MATCHIT_GRID_KINDS[int(rng.integers(len(MATCHIT_GRID_KINDS)))]
    a = grids.gen_grid(kind, rng)
    extra: dict[str, Any] = {}
    if diff == "same":
        b = a.copy()
    elif diff == "similar_transform":
        for _ in range(100):
            t = grids.TRANSFORMS[int(rng.integers(len(grids.TRANSFORMS)))]
            b = grids.transform_grid(a, t)
            if not np.array_equal(a, b):
                break
            a = grids.gen_grid(kind, rng)
        else:  # pragma: no cover - every kind has asymmetric members
            raise RuntimeError("no asymmetric grid found")
        extra["transform"] = t
    elif diff == "similar_edit2":
        b = grids.edit_distance_two(a, rng)
    elif diff == "different":
        other = [k for k in MATCHIT_GRID_KINDS if k != kind]
        b = grids.gen_grid(other[int(rng.integers(len(other)))], rng)
        while np.array_equal(a, b):  # pragma: no cover - kinds never coincide
            b = grids.gen_grid(kind, rng)
    else:
        raise ValueError(f"unknown difficulty {diff!r}")
    same = np.array_equal(a, b)
    return {"stimulus_a": grids.render(a), "stimulus_b": grids.render(b),
            "ground_truth": "same" if same else "different",
            "difficulty": diff, "modality": "text", "kind": kind, **extra}


def matchit_photo_payload(spec: ExperimentSpec, rng: np.random.Generator, pairs: Mapping) -> dict:
    """``pairs`` holds the image pool and the candidate lists for one source."""
    diff = spec.params["difficulty"]
    if diff == "same":
        pool = pairs["images"]
        a = b = pool[int(rng.integers(len(pool)))]
    else:
        candidates = pairs[diff]
        if not candidates:
            raise ValueError(f"no {diff} candidate pairs for {spec.experiment}")
        a, b = candidates[int(rng.integers(len(candidates)))]
        if rng.integers(2):
            a, b = b, a
    return {"stimulus_a": a, "stimulus_b": b,
            "ground_truth": "same" if a == b else "different",
            "difficulty": diff, "modality": "image"}


def map_payload(spec: ExperimentSpec, rng: np.random.Generator, manifest: Mapping) -> dict:
    p = spec.params
    for _ in range(100):
        m = gen_map(p["n_rooms"], p["cycle"], rng, ambiguity=p.get("ambiguity"))
        if "bucket" in p:
            try:
                start, target = select_g2x_endpoints(m, p["bucket"], rng)
            except MapGenerationError:
                continue
            m = m.with_endpoints(start, target)
        m = assign_images(m, manifest["rooms"], rng)
        return {"map": m.to_dict(), **{k: v for k, v in p.items() if k != "n_rooms"}}
    raise MapGenerationError(f"no feasible map for {spec.experiment}")


def _matchit_pairs(manifest: Mapping, source: str) -> dict:
    annotations = manifest[f"matchit_{source}"]
    scorer = lambda a, b: label_cosine(annotations[a], annotations[b])  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        different, similar = pair_matchit_photos(annotations, scorer)
    images = sorted(k for k, v in annotations.items() if v)
    return {"images": images, "different": different, "similar": similar}


def generate_experiment(spec: ExperimentSpec, seed: int, manifest: Mapping | None = None) -> list[GameInstance]:
    manifest = placeholder_manifest() if manifest is None else manifest
    exp_seed = spec.seed_for(seed)
    seeds = np.random.SeedSequence(exp_seed).generate_state(spec.n_instances, np.uint32)
    pairs = _matchit_pairs(manifest, spec.params["source"]) if spec.game == "matchit" else None
    out = []
    for i, s in enumerate(int(x) for x in seeds):
        rng = np.random.default_rng(s)
        if spec.game == "reference":
            payload = reference_payload(spec, rng, manifest, i)
        elif spec.game == "matchit-ascii":
            payload = matchit_ascii_payload(spec, rng)
        elif spec.game == "matchit":
            payload = matchit_photo_payload(spec, rng, pairs)
        else:
            payload = map_payload(spec, rng, manifest)
        out.append(GameInstance(spec.game, spec.experiment, str(i), s, payload))
    return out


# --- files ---------------------------------------------------------------------

def instance_file(root: str | os.PathLike, spec: ExperimentSpec) -> Path:
    return Path(root) / spec.game / f"{spec.experiment}.json"


def write_experiment(root, spec: ExperimentSpec, seed: int, manifest: Mapping | None = None) -> Path:
    instances = generate_experiment(spec, seed, manifest)
    doc = {
        "game": spec.game,
        "experiment": spec.experiment,
        "generator_version": GENERATOR_VERSION,
        "seed": seed,
        "params": spec.params,
        "instances": [inst.to_dict() for inst in instances],
    }
    path = instance_file(root, spec)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def generate_suite(
    root, seed: int = 0, games: Sequence[str] | None = None, manifest: Mapping | None = None
) -> list[Path]:
    manifest = placeholder_manifest() if manifest is None else manifest
    paths = []
    for game in games or GAMES:
        for spec in experiments_for(game):
            paths.append(write_experiment(root, spec, seed, manifest))
    return paths


def read_instances(path: str | os.PathLike) -> list[GameInstance]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "instances" in doc:
        doc = doc["instances"]
    return [GameInstance.from_dict(d) for d in doc]
