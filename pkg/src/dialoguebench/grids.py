"""Character-grid stimuli shared by the text Reference and MatchIt games."""

from __future__ import annotations

import numpy as np

FILLED = "X"
EMPTY = "▢"
GRID_SIZE = 5
RANDOM_FILL = 0.4

GRID_KINDS = ("row", "column", "diagonal", "letter", "shape", "random")
TRANSFORMS = ("mirror_h", "mirror_v", "rotate90")


def _stencil(rows: str) -> np.ndarray:
    return np.array([[c == "#" for c in line] for line in rows.split()], dtype=bool)


# bundled 5x5 stencils; substitutes for an unpublished inventory
LETTERS = {
    "A": ".###. #...# ##### #...# #...#",
    "C": ".#### #.... #.... #.... .####",
    "E": "##### #.... ####. #.... #####",
    "F": "##### #.... ####. #.... #....",
    "H": "#...# #...# ##### #...# #...#",
    "I": "##### ..#.. ..#.. ..#.. #####",
    "L": "#.... #.... #.... #.... #####",
    "N": "#...# ##..# #.#.# #..## #...#",
    "O": ".###. #...# #...# #...# .###.",
    "P": "####. #...# ####. #.... #....",
    "T": "##### ..#.. ..#.. ..#.. ..#..",
    "U": "#...# #...# #...# #...# .###.",
    "V": "#...# #...# #...# .#.#. ..#..",
    "X": "#...# .#.#. ..#.. .#.#. #...#",
    "Z": "##### ...#. ..#.. .#... #####",
}
LETTERS = {k: _stencil(v) for k, v in LETTERS.items()}

SHAPES = {
    "plus": "..#.. ..#.. ##### ..#.. ..#..",
    "square": "..... .###. .###. .###. .....",
    "frame": "##### #...# #...# #...# #####",
    "triangle": "..#.. .###. ##### ..... .....",
    "diamond": "..#.. .###. ##### .###. ..#..",
    "ell": "##... ##... ##... ##### #####",
    "tee": "##### ##### ..#.. ..#.. ..#..",
    "staircase": "#.... ##... ###.. ####. #####",
    "arrow": "..#.. .###. #.#.# ..#.. ..#..",
    "heart": ".#.#. ##### ##### .###. ..#..",
}
SHAPES = {k: _stencil(v) for k, v in SHAPES.items()}


def render(cells: np.ndarray) -> str:
    return "\n".join(" ".join(FILLED if c else EMPTY for c in row) for row in cells)


def parse(text: str) -> np.ndarray:
    rows = [line.split(" ") for line in text.split("\n")]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("ragged grid")
    lookup = {FILLED: True, EMPTY: False}
    try:
        return np.array([[lookup[c] for c in row] for row in rows], dtype=bool)
    except KeyError as exc:
        raise ValueError(f"unknown grid symbol {exc.args[0]!r}") from None


def gen_grid(kind: str, rng: np.random.Generator, size: int = GRID_SIZE, p: float = RANDOM_FILL) -> np.ndarray:
    cells = np.zeros((size, size), dtype=bool)
    if kind == "row":
        cells[rng.integers(size), :] = True
    elif kind == "column":
        cells[:, rng.integers(size)] = True
    elif kind == "diagonal":
        cells = np.eye(size, dtype=bool)
        if rng.integers(2):
            cells = np.fliplr(cells)
    elif kind in ("letter", "shape"):
        if size != GRID_SIZE:
            raise ValueError(f"{kind} stencils are {GRID_SIZE}x{GRID_SIZE}")
        table = LETTERS if kind == "letter" else SHAPES
        names = sorted(table)
        cells = table[names[rng.integers(len(names))]].copy()
    elif kind == "random":
        cells = rng.random((size, size)) < p
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    return np.ascontiguousarray(cells)


def transform_grid(cells: np.ndarray, t: str) -> np.ndarray:
    """mirror_h flips left/right (x -> W-1-x), mirror_v flips top/bottom."""
    if t == "mirror_h":
        return np.ascontiguousarray(cells[:, ::-1])
    if t == "mirror_v":
        return np.ascontiguousarray(cells[::-1, :])
    if t == "rotate90":
        if cells.shape[0] != cells.shape[1]:
            raise ValueError(f"rotate90 needs a square grid, got {cells.shape}")
        return np.ascontiguousarray(np.rot90(cells, k=-1))
    raise ValueError(f"unknown transform {t!r}")


def flip_cells(cells: np.ndarray, positions) -> np.ndarray:
    out = cells.copy()
    for r, c in positions:
        out[r, c] = not out[r, c]
    return out


def edit_distance_two(cells: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Invert the symbol at two distinct random cells."""
    if cells.size < 2:
        raise ValueError("grid needs at least two cells")
    flat = rng.choice(cells.size, size=2, replace=False)
    positions = [divmod(int(i), cells.shape[1]) for i in flat]
    return flip_cells(cells, positions)


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.count_nonzero(a != b))


def one_line(cells: np.ndarray) -> str:
    """Rows of a rendered grid joined on one line, for scripted utterances."""
    return " / ".join(render(cells).split("\n"))
