"""Adjacency construction for sampled point sets.

``build_naive`` tests every unordered pair and is the correctness reference.
``build_pruned`` buckets vertices into radial bands of width 2 ln 2 and, for
each pair of bands, only tests pairs whose angular distance is within the
critical angle of the two bands' inner radii. theta_R is non-increasing in
both radii, so that window can only over-approximate the true neighbourhood.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .geometry import TWO_PI, adjacent_mask, critical_angle
from .tiling import BAND, radial_band

_WINDOW_SLACK = 1e-9
_CHUNK = 1 << 22  # candidate pairs tested per vectorised batch


class GeomGraph:
    """Immutable undirected graph in CSR form; neighbour lists sorted by id."""

    def __init__(self, point_set, edges_i, edges_j):
        n = len(point_set)
        a = np.asarray(edges_i, dtype=np.int64)
        b = np.asarray(edges_j, dtype=np.int64)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        if np.any(lo == hi):
            raise ValueError("self-loops are not allowed")
        key = np.unique(lo * max(n, 1) + hi)
        lo, hi = key // max(n, 1), key % max(n, 1)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.point_set = point_set
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.indices = dst
        self.edge_count = int(lo.size)
        self._lo, self._hi = lo, hi
        for arr in (self.indptr, self.indices, self._lo, self._hi):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.point_set)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < nb.size and nb[k] == j)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges i < j in lexicographic order."""
        return np.column_stack([self._lo, self._hi])

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self._lo.tolist(), self._hi.tolist()))

    def __eq__(self, other):
        if not isinstance(other, GeomGraph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self._lo, other._lo)
                and np.array_equal(self._hi, other._hi))


def build_naive(points, block: int = 512) -> GeomGraph:
    """All-pairs reference builder."""
    n = len(points)
    r, t, R = points.r, points.theta, points.R
    ei, ej = [], []
    for s in range(0, n, block):
        rows = np.arange(s, min(s + block, n))
        cols = np.arange(s, n)
        m = adjacent_mask(r[rows, None], t[rows, None], r[None, cols], t[None, cols], R)
        m &= rows[:, None] < cols[None, :]
        a, b = np.nonzero(m)
        ei.append(rows[a])
        ej.append(cols[b])
    if not ei:
        return GeomGraph(points, [], [])
    return GeomGraph(points, np.concatenate(ei), np.concatenate(ej))


def _window_ranges(theta_a, theta_b, w):
    """Index ranges [lo, hi) into sorted theta_b within angle w of each theta_a.

    Up to three ranges per query cover the wrap-around at 0 / 2pi.
    """
    ranges = []
    lo_ang, hi_ang = theta_a - w, theta_a + w
    lo = np.searchsorted(theta_b, np.maximum(lo_ang, 0.0), "left")
    hi = np.searchsorted(theta_b, np.minimum(hi_ang, TWO_PI), "right")
    ranges.append((lo, hi))
    wrap_lo = lo_ang < 0
    lo2 = np.where(wrap_lo, np.searchsorted(theta_b, lo_ang + TWO_PI, "left"), theta_b.size)
    ranges.append((lo2, np.full_like(lo2, theta_b.size)))
    wrap_hi = hi_ang > TWO_PI
    hi3 = np.where(wrap_hi, np.searchsorted(theta_b, hi_ang - TWO_PI, "right"), 0)
    ranges.append((np.zeros_like(hi3), hi3))
    return ranges


def _expand(lo, hi):
    cnt = np.maximum(hi - lo, 0)
    rep = np.repeat(np.arange(lo.size), cnt)
    start = np.repeat(lo - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
    return rep, start + np.arange(rep.size)


def _expand_blocks(lo, hi):
    """Yield (row, col) candidate index arrays in batches of about _CHUNK."""
    cum = np.cumsum(np.maximum(hi - lo, 0))
    s, done = 0, 0
    while s < lo.size:
        e = max(int(np.searchsorted(cum, done + _CHUNK, "right")), s + 1)
        p, q = _expand(lo[s:e], hi[s:e])
        if p.size:
            yield p + s, q
        done = int(cum[e - 1])
        s = e


def build_pruned(points) -> GeomGraph:
    """Band/angle-pruned builder; identical output to :func:`build_naive`."""
    n = len(points)
    if n == 0:
        return GeomGraph(points, [], [])
    r, t, R = points.r, points.theta, points.R
    if np.any(np.diff(t) < 0):
        raise ValueError("point set must be sorted by angle")
    band = radial_band(r, R)
    bands = np.unique(band)
    members = {int(b): np.flatnonzero(band == b) for b in bands}
    inner_r = {b: max(R - (b + 1) * BAND, 0.0) for b in members}
    ei, ej = [], []
    keys = sorted(members)
    for x, a in enumerate(keys):
        ia = members[a]
        for b in keys[x:]:
            ib = members[b]
            w = float(critical_angle(inner_r[a], inner_r[b], R))
            if w >= math.pi:
                ranges = [(np.zeros(ia.size, np.int64), np.full(ia.size, ib.size, np.int64))]
            else:
                ranges = _window_ranges(t[ia], t[ib], w * (1 + _WINDOW_SLACK) + _WINDOW_SLACK)
            for lo, hi in ranges:
                for p, q in _expand_blocks(lo, hi):
                    p, q = ia[p], ib[q]
                    if a == b:
                        keep = p < q
                        p, q = p[keep], q[keep]
                    ok = adjacent_mask(r[p], t[p], r[q], t[q], R)
                    ei.append(p[ok])
                    ej.append(q[ok])
    if not ei:
        return GeomGraph(points, [], [])
    return GeomGraph(points, np.concatenate(ei), np.concatenate(ej))


def _by_band(ids, points):
    band = radial_band(points.r[ids], points.R)
    out = {}
    for b in np.unique(band).tolist():
        sel = ids[band == b]
        out[b] = sel[np.argsort(points.theta[sel], kind="stable")]
    return out


def cross_pairs(points, qa, qb):
    """All adjacent pairs (a, b) with a drawn from ids ``qa`` and b from ``qb``.

    Same band/window pruning as :func:`build_pruned`, for two arbitrary id
    sets. Pairs with a == b are dropped; each qualifying pair appears once.
    """
    qa = np.asarray(qa, dtype=np.int64)
    qb = np.asarray(qb, dtype=np.int64)
    if qa.size == 0 or qb.size == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    r, t, R = points.r, points.theta, points.R
    A, B = _by_band(qa, points), _by_band(qb, points)
    ei, ej = [], []
    for a, ia in A.items():
        for b, ib in B.items():
            lo_a, lo_b = max(R - (a + 1) * BAND, 0.0), max(R - (b + 1) * BAND, 0.0)
            w = float(critical_angle(lo_a, lo_b, R))
            if w >= math.pi:
                ranges = [(np.zeros(ia.size, np.int64), np.full(ia.size, ib.size, np.int64))]
            else:
                ranges = _window_ranges(t[ia], t[ib], w * (1 + _WINDOW_SLACK) + _WINDOW_SLACK)
            for lo, hi in ranges:
                for p, q in _expand_blocks(lo, hi):
                    p, q = ia[p], ib[q]
                    ok = (p != q) & adjacent_mask(r[p], t[p], r[q], t[q], R)
                    ei.append(p[ok])
                    ej.append(q[ok])
    if not ei:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    return np.concatenate(ei), np.concatenate(ej)


BUILDERS = {"naive": build_naive, "pruned": build_pruned}


def build(points, builder: str = "pruned") -> GeomGraph:
    try:
        return BUILDERS[builder](points)
    except KeyError:
        raise ValueError(f"unknown builder {builder!r}") from None


def degree_stats(graph: GeomGraph) -> dict:
    deg = graph.degrees()
    if deg.size == 0:
        return {"mean": 0.0, "min": 0, "max": 0, "histogram": [], "degenerate": True}
    return {
        "mean": 2.0 * graph.edge_count / graph.n,
        "min": int(deg.min()),
        "max": int(deg.max()),
        "histogram": np.bincount(deg).tolist(),
        "degenerate": False,
    }


def format_edges(graph: GeomGraph) -> str:
    lines = [graph.point_set.header()]
    lines += [f"{i} {j}" for i, j in zip(graph._lo.tolist(), graph._hi.tolist())]
    return "\n".join(lines) + "\n"


def write_edges(graph: GeomGraph, path) -> None:
    Path(path).write_text(format_edges(graph))
