"""Matchings and the outer-annulus counting obstruction.

Take s = 1/alpha. A vertex with r >= R - s and no neighbour in that outer
annulus can only be matched to a vertex with r < R - s, and distinct such
vertices need distinct partners. If N_s of them face only M_s possible
partners, a perfect matching needs N_s <= M_s and a near-perfect one (one
vertex may stay uncovered) needs N_s <= M_s + 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import adjacent_mask
from .hamilton import Verdict, verify_cycle


@dataclass(frozen=True)
class Obstruction:
    s: float
    Ns: int
    Ms: int
    outer: int  # vertices with r >= R - s
    total: int

    @property
    def certified(self) -> bool:
        """Raw comparison N_s > M_s, without the small-instance carve-out."""
        return self.Ns > self.Ms


@dataclass(frozen=True)
class Matching:
    pairs: list
    uncovered: list

    @property
    def near_perfect(self) -> bool:
        return len(self.uncovered) <= 1


def obstruction_counts(points, graph) -> Obstruction:
    """Exact N_s and M_s for s = 1/alpha."""
    R = points.R
    s = 1.0 / points.params.alpha
    if s >= R:
        raise ValueError(f"s = 1/alpha = {s:g} must be below R = {R:g}")
    outer = points.r >= R - s
    total = len(points)
    if total == 0:
        return Obstruction(s, 0, 0, 0, 0)
    # an outer vertex counts when none of its neighbours is outer
    e = graph.edges()
    has_outer_nb = np.zeros(total, dtype=bool)
    if e.size:
        a, b = e[:, 0], e[:, 1]
        has_outer_nb[a[outer[b]]] = True
        has_outer_nb[b[outer[a]]] = True
    Ns = int(np.count_nonzero(outer & ~has_outer_nb))
    n_outer = int(np.count_nonzero(outer))
    return Obstruction(s, Ns, total - n_outer, n_outer, total)


def certify_no_matching(obs: Obstruction, total_vertices: int) -> bool:
    """True only if no near-perfect matching can exist (N_s > M_s + 1)."""
    if total_vertices <= 1:
        return False
    return obs.Ns > obs.Ms + 1


def certify_no_perfect_matching(obs: Obstruction, total_vertices: int) -> bool:
    """True only if no perfect matching can exist (N_s > M_s)."""
    if total_vertices <= 1:
        return False
    return obs.Ns > obs.Ms


def obstruction_record(points, obs: Obstruction) -> dict:
    p = points.params
    return {
        "n": p.n, "alpha": p.alpha, "nu": p.nu, "seed": points.seed,
        "model": points.model_kind, "Ns": obs.Ns, "Ms": obs.Ms,
        "certified_perfect": certify_no_perfect_matching(obs, obs.total),
        "certified_near_perfect": certify_no_matching(obs, obs.total),
    }


def write_obstruction(points, obs: Obstruction, path) -> None:
    Path(path).write_text(json.dumps(obstruction_record(points, obs), indent=2) + "\n")


def matching_from_cycle(cycle, points=None) -> Matching:
    """Alternate edges of a Hamilton cycle.

    With ``points`` given, the cycle is verified first and rejected if it is
    not a Hamilton cycle of that point set.
    """
    seq = [int(v) for v in cycle]
    if len(seq) < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    if len(set(seq)) != len(seq):
        raise ValueError("cycle repeats a vertex")
    if points is not None:
        v = verify_cycle(points, seq)
        if not v:
            raise ValueError(f"not a Hamilton cycle: {v.reason}")
    pairs = [(seq[k], seq[k + 1]) for k in range(0, len(seq) - 1, 2)]
    uncovered = [seq[-1]] if len(seq) % 2 else []
    return Matching(pairs, uncovered)


def verify_matching(points, m: Matching) -> Verdict:
    """Disjointness, adjacency of every pair and exactness of ``uncovered``."""
    n = len(points)
    seen = np.zeros(n, dtype=bool)
    for a, b in m.pairs:
        for v in (a, b):
            if not 0 <= v < n:
                return Verdict(False, f"unknown vertex {v}")
            if seen[v]:
                return Verdict(False, f"shared endpoint {v}")
            seen[v] = True
    if m.pairs:
        a = np.array([p[0] for p in m.pairs])
        b = np.array([p[1] for p in m.pairs])
        ok = adjacent_mask(points.r[a], points.theta[a], points.r[b], points.theta[b], points.R)
        if not np.all(ok):
            k = int(np.argmin(ok))
            return Verdict(False, f"non-edge {int(a[k])}-{int(b[k])}")
    expected = np.flatnonzero(~seen).tolist()
    if sorted(int(u) for u in m.uncovered) != expected:
        return Verdict(False, "uncovered list does not match the uncovered vertices")
    return Verdict(True)
