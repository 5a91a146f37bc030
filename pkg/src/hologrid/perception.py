"""From pixel grids to scenes of encoded objects.

A grid is a small matrix of colour indices 0..9 where 0 is background.
Six segmentation hypotheses carve the nonzero pixels into object masks;
each mask is then summarized by three holographic vectors (colour symbol,
blurred centre location, translation-invariant shape) that downstream
stages compare and manipulate.

Coordinates: the origin sits at the grid centre, x grows rightward with
columns and y grows upward against rows, so a pixel's centre is
``(col - (C-1)/2, (R-1)/2 - row)``.  Bounding-box midpoints land on half
integers for even extents, which is why positions are continuous.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from . import vsa
from .ssp import SspEncoder
from .vsa import HyperVector, Vocabulary, VsaConfig

Grid = NDArray[np.int_]

MAX_SIDE = 30
NUM_COLOURS = 10


class GridError(ValueError):
    """Raised for malformed grid data."""


def as_grid(data) -> Grid:
    """Validate and convert nested lists / arrays into a grid."""
    try:
        arr = np.asarray(data, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise GridError(f"grid is not rectangular: {exc}") from None
    if arr.ndim != 2 or arr.size == 0:
        raise GridError(f"grid must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.shape[0] > MAX_SIDE or arr.shape[1] > MAX_SIDE:
        raise GridError(f"grid sides may not exceed {MAX_SIDE}, got {arr.shape}")
    bad = np.argwhere((arr < 0) | (arr >= NUM_COLOURS))
    if bad.size:
        r, c = (int(v) for v in bad[0])
        raise GridError(
            f"grid values must be colour indices 0..9, got {int(arr[r, c])} at row {r}, column {c}"
        )
    return arr


def grid_equal(a: Grid, b: Grid) -> bool:
    return a.shape == b.shape and bool(np.array_equal(a, b))


def to_xy(row: float, col: float, dims: tuple[int, int]) -> tuple[float, float]:
    """Pixel-space (row, col) to centred (x, y)."""
    r, c = dims
    return (col - (c - 1) / 2.0, (r - 1) / 2.0 - row)


def to_rc(x: float, y: float, dims: tuple[int, int]) -> tuple[float, float]:
    """Centred (x, y) back to fractional (row, col)."""
    r, c = dims
    return ((r - 1) / 2.0 - y, x + (c - 1) / 2.0)


class ObjectHypothesis(Enum):
    """The segmentation schemes, in ranking tie-break order."""

    EIGHT_CONNECTED = "8-connected"
    FOUR_CONNECTED = "4-connected"
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    COLOUR = "colour"
    PIXEL = "pixel"


@dataclass(frozen=True)
class ObjectMask:
    """One object: a colour and its cells within a grid of known dims."""

    colour: int
    cells: frozenset[tuple[int, int]]
    dims: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.cells:
            raise GridError("an object mask cannot be empty")
        if not (1 <= self.colour < NUM_COLOURS):
            raise GridError(f"object colour must be 1..9, got {self.colour}")

    def bbox(self) -> tuple[int, int, int, int]:
        rows = [r for r, _ in self.cells]
        cols = [c for _, c in self.cells]
        return (min(rows), min(cols), max(rows), max(cols))

    def centre_rc(self) -> tuple[float, float]:
        r0, c0, r1, c1 = self.bbox()
        return ((r0 + r1) / 2.0, (c0 + c1) / 2.0)

    def centre_point(self) -> tuple[float, float]:
        """Bounding-box midpoint in centred coordinates."""
        mid_r, mid_c = self.centre_rc()
        return to_xy(mid_r, mid_c, self.dims)

    def offsets(self) -> frozenset[tuple[float, float]]:
        """Cells relative to the bbox midpoint, as (drow, dcol); translation-free."""
        mid_r, mid_c = self.centre_rc()
        return frozenset((r - mid_r, c - mid_c) for r, c in self.cells)

    def sort_key(self) -> tuple[int, int, int]:
        r0, c0, _, _ = self.bbox()
        return (r0, c0, self.colour)


_FOUR = ((-1, 0), (1, 0), (0, -1), (0, 1))
_EIGHT = _FOUR + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _flood_components(grid: Grid, neighbours) -> list[set[tuple[int, int]]]:
    """Same-colour connected components over nonzero cells."""
    seen: set[tuple[int, int]] = set()
    comps = []
    rows, cols = grid.shape
    for r in range(rows):
        for c in range(cols):
            if grid[r, c] == 0 or (r, c) in seen:
                continue
            colour = grid[r, c]
            stack = [(r, c)]
            comp = {(r, c)}
            seen.add((r, c))
            while stack:
                cr, cc = stack.pop()
                for dr, dc in neighbours:
                    nr, nc = cr + dr, cc + dc
                    if 0 <= nr < rows and 0 <= nc < cols and (nr, nc) not in seen and grid[nr, nc] == colour:
                        seen.add((nr, nc))
                        comp.add((nr, nc))
                        stack.append((nr, nc))
            comps.append(comp)
    return comps


def _runs(grid: Grid, vertical: bool) -> list[set[tuple[int, int]]]:
    """Maximal same-colour runs along columns (vertical) or rows."""
    rows, cols = grid.shape
    out = []
    outer, inner = (cols, rows) if vertical else (rows, cols)
    for o in range(outer):
        run: set[tuple[int, int]] = set()
        prev = 0
        for i in range(inner):
            r, c = (i, o) if vertical else (o, i)
            v = grid[r, c]
            if v != prev and run:
                out.append(run)
                run = set()
            if v != 0:
                run.add((r, c))
            prev = v
        if run:
            out.append(run)
    return out


def segment(grid: Grid, hypothesis: ObjectHypothesis) -> list[ObjectMask]:
    """Split a grid's nonzero pixels into object masks under one hypothesis.

    The result is ordered by (min row, min col, colour) of each mask, which
    fixes object identity everywhere downstream.
    """
    if hypothesis is ObjectHypothesis.EIGHT_CONNECTED:
        groups = _flood_components(grid, _EIGHT)
    elif hypothesis is ObjectHypothesis.FOUR_CONNECTED:
        groups = _flood_components(grid, _FOUR)
    elif hypothesis is ObjectHypothesis.VERTICAL:
        groups = _runs(grid, vertical=True)
    elif hypothesis is ObjectHypothesis.HORIZONTAL:
        groups = _runs(grid, vertical=False)
    elif hypothesis is ObjectHypothesis.COLOUR:
        groups = [
            {(int(r), int(c)) for r, c in zip(*np.nonzero(grid == colour))}
            for colour in sorted(set(grid[grid > 0].tolist()))
        ]
    elif hypothesis is ObjectHypothesis.PIXEL:
        groups = [{(int(r), int(c))} for r, c in zip(*np.nonzero(grid))]
    else:  # pragma: no cover - exhaustive over the enum
        raise ValueError(hypothesis)
    dims = (int(grid.shape[0]), int(grid.shape[1]))
    masks = [
        ObjectMask(int(grid[next(iter(g))]), frozenset(g), dims)
        for g in groups
        if g
    ]
    return sorted(masks, key=ObjectMask.sort_key)


# ---------------------------------------------------------------- encoding

BLUR_SIGMA = 0.5

_BLUR_OFFSETS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
_BLUR_WEIGHTS = np.array(
    [np.exp(-(dx * dx + dy * dy) / (2 * BLUR_SIGMA**2)) for dx, dy in _BLUR_OFFSETS]
)


@dataclass
class ObjectRepr:
    """An object plus its three holographic property vectors."""

    mask: ObjectMask
    colour_vec: HyperVector
    centre_vec: HyperVector
    shape_vec: HyperVector

    def centre_point(self) -> tuple[float, float]:
        return self.mask.centre_point()

    def signature(self):
        """Exact identity of the object up to the grid frame: colour, centre, shape."""
        return (self.mask.colour, self.mask.centre_point(), self.mask.offsets())


@dataclass
class Scene:
    """A grid perceived under one hypothesis."""

    grid: Grid
    hypothesis: ObjectHypothesis
    objects: list[ObjectRepr]


def build_palette(config: VsaConfig) -> Vocabulary:
    """Vocabulary of the ten colour symbols (index 0 included for cleanup maps)."""
    vocab = Vocabulary(config)
    for colour in range(NUM_COLOURS):
        vocab.add(f"colour:{colour}")
    return vocab


def encode_object(mask: ObjectMask, encoder: SspEncoder, palette: Vocabulary) -> ObjectRepr:
    """Build the colour / centre / shape vectors for one mask.

    The centre vector is a Gaussian-blurred stamp of the bbox midpoint: a
    3x3 stencil of encodings weighted by exp(-d^2 / 2 sigma^2), normalized.
    Blurring widens the similarity peak so nearby centres score smoothly
    rather than falling straight to noise level.

    The shape vector bundles the encodings of every cell offset relative to
    the midpoint, making it invariant to translation by construction.
    """
    colour_vec = palette[f"colour:{mask.colour}"]
    cx, cy = mask.centre_point()
    stencil = np.array([(cx + dx, cy + dy) for dx, dy in _BLUR_OFFSETS])
    blurred = _BLUR_WEIGHTS @ encoder.encode_many(stencil)
    centre_vec = vsa.normalize(blurred)

    mid_r, mid_c = mask.centre_rc()
    offsets_xy = np.array([(c - mid_c, mid_r - r) for r, c in sorted(mask.cells)])
    shape_vec = vsa.normalize(encoder.encode_many(offsets_xy).sum(axis=0))
    return ObjectRepr(mask=mask, colour_vec=colour_vec, centre_vec=centre_vec, shape_vec=shape_vec)


def perceive(grid: Grid, hypothesis: ObjectHypothesis, encoder: SspEncoder, palette: Vocabulary) -> Scene:
    """Segment and encode a grid under one hypothesis."""
    masks = segment(grid, hypothesis)
    objects = [encode_object(m, encoder, palette) for m in masks]
    return Scene(grid=grid, hypothesis=hypothesis, objects=objects)
