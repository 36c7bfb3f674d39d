"""Layered tiling of the disk used by the Hamilton cycle construction.

Layer i is the radial band [R - (i+1) 2ln2, R - i 2ln2) split into
n_i = 2**(4 - i + floor(R / 2ln2)) equal sectors, so every tile has exactly
two children in the layer below it. Layers run i = 0 .. i_max with
i_max = ceil(0.9 R / 2ln2); anything closer to the origin is the inner disk.

Only occupied tiles are stored. At R around 30 layer 0 has ~10**7 tiles, of
which at most n hold a point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import TWO_PI

BAND = 2.0 * math.log(2.0)
INNER = -1


class TilingError(ValueError):
    pass


@dataclass(frozen=True)
class TileIndex:
    i: int
    j: int


@dataclass(frozen=True)
class LayerGeometry:
    R: float
    base: int  # floor(R / 2ln2)
    i_max: int

    def n(self, i: int) -> int:
        self.check_layer(i)
        return 1 << (4 - i + self.base)

    def band(self, i: int) -> tuple[float, float]:
        """Half-open radial band [lo, hi) of layer i, clipped at the origin."""
        self.check_layer(i)
        return max(self.R - (i + 1) * BAND, 0.0), max(self.R - i * BAND, 0.0)

    @property
    def inner_radius(self) -> float:
        return max(self.R - (self.i_max + 1) * BAND, 0.0)

    def check_layer(self, i: int) -> None:
        if not 0 <= i <= self.i_max:
            raise TilingError(f"layer {i} outside 0..{self.i_max}")


def layer_geometry(R: float) -> LayerGeometry:
    if not R > 0:
        raise TilingError("n too small for tiling-based construction (R <= 0)")
    y = R / BAND
    base = math.floor(y)
    i_max = math.ceil(0.9 * y)
    if 4 - i_max + base < 0:
        raise TilingError("n too small for tiling-based construction")
    return LayerGeometry(R=R, base=base, i_max=i_max)


def radial_band(r, R):
    """Index k of the band [R-(k+1)2ln2, R-k 2ln2) containing r, for any k >= 0."""
    r = np.asarray(r, dtype=float)
    k = np.floor((R - r) / BAND).astype(np.int64)
    k = np.maximum(k, 0)
    # nudge against rounding so the half-open band edges hold as computed
    k = np.where(r < R - (k + 1) * BAND, k + 1, k)
    k = np.where((k > 0) & (r >= R - k * BAND), k - 1, k)
    return k


def locate_arrays(r, theta, geo: LayerGeometry):
    """Vectorised locate: (layer, j); layer == INNER for the inner disk."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    layer = radial_band(r, geo.R)
    inner = layer > geo.i_max
    layer = np.where(inner, INNER, layer)
    ni = np.where(inner, 1, np.left_shift(1, 4 - np.where(inner, 0, layer) + geo.base))
    # sectors are (j w, (j+1) w]; theta = 0 behaves as 2pi
    j = np.ceil(theta * ni / TWO_PI).astype(np.int64) - 1
    j = np.where(j < 0, ni - 1, j)
    j = np.minimum(j, ni - 1)
    j = np.where(inner, 0, j)
    return layer, j


def locate(p, R: float):
    """TileIndex holding p, or None for the inner disk."""
    if not 0 <= p.r < R:
        raise ValueError("point outside D_R")
    geo = layer_geometry(R)
    layer, j = locate_arrays(p.r, p.theta, geo)
    if int(layer) == INNER:
        return None
    return TileIndex(int(layer), int(j))


def is_below(t1: TileIndex, t2: TileIndex) -> bool:
    """True when t1 lies in t2's sector at the same or an outer layer."""
    if t1.i > t2.i:
        return False
    return (t1.j >> (t2.i - t1.i)) == t2.j


class TileCounts:
    """Occupied tiles per layer plus the vertex ids in each."""

    def __init__(self, geo: LayerGeometry, layer, j, total: int):
        self.geo = geo
        self.total = total
        ids = np.arange(total)
        inner = layer == INNER
        self.inner_disk_points = ids[inner]
        self.tiles: list[np.ndarray] = []
        self.counts: list[np.ndarray] = []
        self._offsets: list[np.ndarray] = []
        self._members: list[np.ndarray] = []
        for i in range(geo.i_max + 1):
            sel = ids[layer == i]
            jj = j[sel]
            order = np.argsort(jj, kind="stable")
            sel, jj = sel[order], jj[order]
            tiles, starts, cnt = np.unique(jj, return_index=True, return_counts=True)
            self.tiles.append(tiles)
            self.counts.append(cnt)
            self._offsets.append(np.append(starts, sel.size))
            self._members.append(sel)

    def count(self, i: int, j: int) -> int:
        k = np.searchsorted(self.tiles[i], j)
        if k < self.tiles[i].size and self.tiles[i][k] == j:
            return int(self.counts[i][k])
        return 0

    def members(self, i: int, j: int) -> np.ndarray:
        k = np.searchsorted(self.tiles[i], j)
        if k < self.tiles[i].size and self.tiles[i][k] == j:
            off = self._offsets[i]
            return self._members[i][off[k]:off[k + 1]]
        return np.empty(0, dtype=np.int64)

    def dense(self, i: int) -> np.ndarray:
        out = np.zeros(self.geo.n(i), dtype=np.int64)
        out[self.tiles[i]] = self.counts[i]
        return out

    def layer_total(self, i: int) -> int:
        return int(self.counts[i].sum())

    def __getitem__(self, i):
        return self.dense(i)

    def to_csv(self, path=None, include_empty=False) -> str:
        rows = ["layer,tile,count"]
        for i in range(self.geo.i_max + 1):
            if include_empty:
                rows += [f"{i},{jj},{c}" for jj, c in enumerate(self.dense(i))]
            else:
                rows += [f"{i},{jj},{c}" for jj, c in zip(self.tiles[i], self.counts[i])]
        text = "\n".join(rows) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def tile_counts(points) -> TileCounts:
    geo = layer_geometry(points.R)
    layer, j = locate_arrays(points.r, points.theta, geo)
    return TileCounts(geo, layer, j, len(points))


def tile_measure(i: int, params) -> float:
    """Expected number of Poisson points in any tile of layer i."""
    geo = layer_geometry(params.R)
    lo, hi = geo.band(i)
    a = params.alpha
    # cosh(a hi) - cosh(a lo) = 2 sinh(a (hi+lo)/2) sinh(a (hi-lo)/2)
    mass = 2.0 * math.sinh(0.5 * a * (hi + lo)) * math.sinh(0.5 * a * (hi - lo))
    whole = 2.0 * math.sinh(0.5 * a * params.R) ** 2
    return params.n * mass / (geo.n(i) * whole)
