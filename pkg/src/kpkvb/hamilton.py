"""Constructive Hamilton cycle search over the layered tiling.

Tiles are processed from the boundary inwards. Each tile turns the covers of
its two children (vertex-disjoint cycles plus isolated vertices) and its own
points into a cover of its whole subtree, splicing components through edges
of a cycle on the tile's points. All points of a tile are adjacent to every
point below it, which is what makes those splices legal; each new edge is
nonetheless re-checked against the geometric predicate when ``validate`` is
on. Demands bound the number of components left per subtree, and when every
top-layer demand is zero the top-layer cycles plus the inner disk chain into
one Hamilton cycle.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import adjacent_mask
from .graphcore import cross_pairs
from .tiling import TileCounts, TileIndex, tile_counts

# N = 1 tiles look for an adjacent pair among this many singletons below
_PAIR_SCAN_LIMIT = 64


class SpliceError(ValueError):
    """A splice would use a pair of vertices that is not an edge."""


class CoverBoundError(AssertionError):
    """A subtree cover broke the demand bound (an implementation bug)."""


# --- demand table ------------------------------------------------------------

def empty_subtree_demand(i: int) -> int:
    # D_0 = 0, D_i = 2 D_{i-1} + 3
    return 3 * ((1 << i) - 1)


class DemandTable:
    """Demands D[i][j]; tiles whose whole subtree is empty are implicit."""

    def __init__(self, n_per_layer, tiles, values):
        self.n_per_layer = list(n_per_layer)
        self.tiles = tiles
        self.values = values

    @property
    def i_max(self) -> int:
        return len(self.tiles) - 1

    def get(self, i: int, j: int) -> int:
        k = np.searchsorted(self.tiles[i], j)
        if k < self.tiles[i].size and self.tiles[i][k] == j:
            return int(self.values[i][k])
        if not 0 <= j < self.n_per_layer[i]:
            raise IndexError(f"tile ({i}, {j}) out of range")
        return empty_subtree_demand(i)

    def dense(self, i: int) -> np.ndarray:
        out = np.full(self.n_per_layer[i], empty_subtree_demand(i), dtype=np.int64)
        out[self.tiles[i]] = self.values[i]
        return out

    def __getitem__(self, i):
        return self.dense(i)

    def top_layer_clear(self) -> bool:
        """True when every top-layer demand is zero."""
        i = self.i_max
        if self.tiles[i].size < self.n_per_layer[i]:
            return empty_subtree_demand(i) == 0
        return bool(np.all(self.values[i] == 0))

    def nonzero(self, i: int) -> list[tuple[int, int]]:
        d = self.dense(i) if self.n_per_layer[i] <= 1 << 16 else None
        if d is not None:
            return [(int(j), int(v)) for j, v in enumerate(d) if v]
        return [(int(j), int(v)) for j, v in zip(self.tiles[i], self.values[i]) if v]

    def tail_counts(self, i: int, t_max: int) -> np.ndarray:
        """Number of layer-i tiles with D >= t, for t = 0..t_max."""
        vals = np.minimum(self.values[i], t_max)
        hist = np.bincount(vals, minlength=t_max + 1).astype(np.int64)
        hist[min(empty_subtree_demand(i), t_max)] += self.n_per_layer[i] - self.tiles[i].size
        return hist[::-1].cumsum()[::-1]


def _lookup(keys, vals, query, default):
    pos = np.searchsorted(keys, query)
    pos_c = np.minimum(pos, max(keys.size - 1, 0))
    hit = (pos < keys.size) & (keys[pos_c] == query) if keys.size else np.zeros(query.shape, bool)
    out = np.full(query.shape, default, dtype=np.int64)
    if keys.size:
        out[hit] = vals[pos_c[hit]]
    return out


def demands(counts: TileCounts) -> DemandTable:
    geo = counts.geo
    tiles, values = [], []
    for i in range(geo.i_max + 1):
        t_i, c_i = counts.tiles[i], counts.counts[i]
        if i == 0:
            occ = t_i.astype(np.int64)
            d = np.where((c_i == 1) | (c_i == 2), c_i, 0).astype(np.int64)
        else:
            occ = np.union1d(tiles[-1] >> 1, t_i).astype(np.int64)
            empty = empty_subtree_demand(i - 1)
            dl = _lookup(tiles[-1], values[-1], 2 * occ, empty)
            dr = _lookup(tiles[-1], values[-1], 2 * occ + 1, empty)
            nn = _lookup(t_i, c_i, occ, 0)
            d = np.maximum(dl + dr + 3 - nn, 0)
        tiles.append(occ)
        values.append(d)
    return DemandTable([geo.n(i) for i in range(geo.i_max + 1)], tiles, values)


def demand_recursion(layer_counts) -> list[np.ndarray]:
    """Dense demands from dense per-layer counts (small tilings only)."""
    out = []
    for i, c in enumerate(layer_counts):
        c = np.asarray(c, dtype=np.int64)
        if i == 0:
            out.append(np.where((c == 1) | (c == 2), c, 0))
        else:
            prev = out[-1]
            out.append(np.maximum(prev[0::2] + prev[1::2] + 3 - c, 0))
    return out


# --- covers --------------------------------------------------------------------

class Cycle:
    """Vertex sequence read cyclically, plus the unused edges of the tile
    cycle it was last built around (``spare``, living in tile ``tile``)."""

    __slots__ = ("verts", "spare", "tile", "_lo")

    def __init__(self, verts, spare=(), tile=None):
        self.verts = list(verts)
        self.spare = list(spare)
        self.tile = tile
        self._lo = None

    @property
    def lo(self) -> int:
        if self._lo is None:
            self._lo = min(self.verts)
        return self._lo

    def __len__(self):
        return len(self.verts)

    def __repr__(self):
        return f"Cycle({self.verts!r}, spare={self.spare!r}, tile={self.tile!r})"


@dataclass
class CycleCover:
    cycles: list = field(default_factory=list)
    singletons: list = field(default_factory=list)
    region: TileIndex | None = None

    def __len__(self):
        return len(self.cycles) + len(self.singletons)

    def components(self) -> list:
        """Pickup order: cycles, then singletons, each by smallest vertex id."""
        return sorted(self.cycles, key=lambda c: c.lo) + sorted(self.singletons)

    def vertex_ids(self) -> list[int]:
        ids = list(self.singletons)
        for c in self.cycles:
            ids.extend(c.verts)
        return ids

    @classmethod
    def join(cls, covers, region=None):
        out = cls(region=region)
        for c in covers:
            if c is not None:
                out.cycles.extend(c.cycles)
                out.singletons.extend(c.singletons)
        return out


def _check_edges(points, a, b, what):
    if not a:
        return
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    ok = adjacent_mask(points.r[a], points.theta[a], points.r[b], points.theta[b], points.R)
    if not np.all(ok):
        k = int(np.argmin(ok))
        raise SpliceError(f"{what}: {a[k]}-{b[k]} is not an edge")


def _smallest_edge(verts) -> int:
    """Position t of the lexicographically smallest edge (verts[t], verts[t+1])."""
    m = len(verts)
    if m > 64:
        arr = np.asarray(verts, dtype=np.int64)
        nxt = np.roll(arr, -1)
        lo, hi = np.minimum(arr, nxt), np.maximum(arr, nxt)
        order = np.lexsort((hi, lo))
        return int(order[0])
    best = None
    for t in range(m):
        u, w = verts[t], verts[(t + 1) % m]
        key = (u, w) if u < w else (w, u)
        if best is None or key < best[0]:
            best = (key, t)
    return best[1]


def _open_at(verts, t) -> list[int]:
    """Hamilton path of the cycle without edge (verts[t], verts[t+1]),
    running from verts[t] to verts[t+1]."""
    return verts[t::-1] + verts[:t:-1]


def _open_smallest(verts) -> list[int]:
    t = _smallest_edge(verts)
    u, w = verts[t], verts[(t + 1) % len(verts)]
    path = _open_at(verts, t)
    return path if u < w else path[::-1]


def _open_at_edge(verts, edge) -> list[int]:
    a, b = edge
    k = verts.index(a)
    m = len(verts)
    if verts[(k + 1) % m] == b:
        return _open_at(verts, k)
    if verts[k - 1] == b:
        return _open_at(verts, (k - 1) % m)[::-1]
    raise SpliceError(f"({a}, {b}) is not an edge of the cycle")


def _component_path(comp) -> list[int]:
    return [comp] if isinstance(comp, int) else _open_smallest(comp.verts)


def merge_into_tile_cycle(cover_below: CycleCover, tile_vertices, points,
                          tile: TileIndex | None = None, validate: bool = True) -> CycleCover:
    """Build the cycle on the tile's y >= 3 points and splice up to y
    components of ``cover_below`` into it, one per tile-cycle edge."""
    v = sorted(int(x) for x in tile_vertices)
    y = len(v)
    if y < 3:
        raise ValueError(f"tile cycle needs at least 3 vertices, got {y}")
    comps = cover_below.components()
    k = min(len(comps), y)
    verts, ea, eb = [], [], []
    for idx in range(y):
        vi, vn = v[idx], v[(idx + 1) % y]
        verts.append(vi)
        if idx < k:
            path = _component_path(comps[idx])
            verts.extend(path)
            ea += [vi, path[-1]]
            eb += [path[0], vn]
        else:
            ea.append(vi)
            eb.append(vn)
    if validate:
        _check_edges(points, ea, eb, "tile merge")
    spare = [(v[idx], v[(idx + 1) % y]) for idx in range(k, y)]
    out = CycleCover(region=tile)
    out.cycles.append(Cycle(verts, spare, tile))
    for c in comps[k:]:
        (out.singletons if isinstance(c, int) else out.cycles).append(c)
    return out


def _glue_two(cover: CycleCover, t1: int, t2: int, points, tile, validate) -> CycleCover:
    # t1 -> C1 -> t2 -> C2 -> t1; tile points are adjacent to everything below
    comps = cover.components()
    if not comps:
        return CycleCover(singletons=[t1, t2], region=tile)
    used = comps[:2]
    p1 = _component_path(used[0])
    verts = [t1] + p1 + [t2]
    ea, eb = [t1, p1[-1]], [p1[0], t2]
    spare = []
    if len(used) == 2:
        p2 = _component_path(used[1])
        verts += p2
        ea += [t2, p2[-1]]
        eb += [p2[0], t1]
    else:
        ea.append(t2)
        eb.append(t1)
        spare = [(t2, t1)]
    if validate:
        _check_edges(points, ea, eb, "two-point glue")
    out = CycleCover(region=tile)
    out.cycles.append(Cycle(verts, spare, tile))
    for c in comps[len(used):]:
        (out.singletons if isinstance(c, int) else out.cycles).append(c)
    return out


def _absorb_one(cover: CycleCover, t: int, points, tile, validate) -> CycleCover:
    comps = cover.components()
    if cover.cycles:
        first = comps[0]
        path = _open_smallest(first.verts)
        if validate:
            _check_edges(points, [t, path[-1]], [path[0], t], "one-point splice")
        out = CycleCover(region=tile)
        out.cycles.append(Cycle([t] + path, (), tile))
        for c in comps[1:]:
            (out.singletons if isinstance(c, int) else out.cycles).append(c)
        return out
    singles = comps[:_PAIR_SCAN_LIMIT]
    if len(singles) >= 2:
        ids = np.asarray(singles, dtype=np.int64)
        r, th = points.r[ids], points.theta[ids]
        for a in range(len(singles) - 1):
            m = adjacent_mask(r[a], th[a], r[a + 1:], th[a + 1:], points.R)
            if m.any():
                b = a + 1 + int(np.argmax(m))
                sa, sb = singles[a], singles[b]
                if validate:
                    _check_edges(points, [t, sa, sb], [sa, sb, t], "triangle")
                rest = [s for s in cover.singletons if s != sa and s != sb]
                return CycleCover([Cycle([t, sa, sb], (), tile)], rest, tile)
    return CycleCover([], list(cover.singletons) + [t], tile)


def process_tile(child_covers, tile: TileIndex, tile_vertices, points,
                 demand: int | None = None, validate: bool = True) -> CycleCover:
    """Cover of the subtree under ``tile`` from its children's covers.

    With ``demand`` given, the component bound D + 1 (and, for i > 0 and
    D == 0, the single-cycle-with-in-tile-edge property) is enforced.
    """
    below = CycleCover.join(child_covers, region=tile)
    tv = sorted(int(x) for x in tile_vertices)
    if len(tv) >= 3:
        out = merge_into_tile_cycle(below, tv, points, tile, validate)
    elif len(tv) == 2:
        out = _glue_two(below, tv[0], tv[1], points, tile, validate)
    elif len(tv) == 1:
        out = _absorb_one(below, tv[0], points, tile, validate)
    else:
        out = below
    if demand is not None:
        check_cover(out, tile, demand)
    return out


def check_cover(cover: CycleCover, tile: TileIndex, demand: int) -> None:
    if len(cover) > demand + 1:
        raise CoverBoundError(
            f"tile {tile}: {len(cover)} components exceed demand bound {demand + 1}")
    if tile.i > 0 and demand == 0:
        ok = (len(cover.cycles) == 1 and not cover.singletons
              and cover.cycles[0].spare and cover.cycles[0].tile == tile)
        if not ok:
            raise CoverBoundError(f"tile {tile}: zero demand without a single cycle "
                                  "holding an in-tile edge")


# --- whole-graph construction ---------------------------------------------------

@dataclass
class HamResult:
    status: str
    cycle: list | None
    residual: list
    demand_table: DemandTable | None
    stats: dict
    fallback_used: bool = False
    reason: str = ""

    @property
    def success(self) -> bool:
        return self.status == "success"

    def certificate(self) -> dict:
        top = []
        if self.demand_table is not None:
            i = self.demand_table.i_max
            top = [[i, j, d] for j, d in self.demand_table.nonzero(i)]
        return {
            "status": self.status,
            "reason": self.reason,
            "residual_components": [list(c) for c in self.residual],
            "demand_nonzero_tiles": top,
        }


def _splice(master, edge, path, points, validate):
    """Insert ``path`` into ``master`` in place of edge (u, v)."""
    u, v = edge
    k = master.index(u)
    m = len(master)
    if master[(k + 1) % m] == v:
        new = master[:k + 1] + path + master[k + 1:]
    elif master[k - 1] == v:
        new = master[:k] + path[::-1] + master[k:]
    else:
        raise SpliceError(f"({u}, {v}) is not an edge of the master cycle")
    if validate:
        _check_edges(points, [u, path[-1]], [path[0], v], "chain splice")
    return new, (u, path[0])


def _master_adjacency(master, residual, points):
    """Sorted master positions adjacent to each residual vertex, as a dict."""
    L = len(master)
    pos = np.full(len(points), -1, dtype=np.int64)
    pos[np.asarray(master, dtype=np.int64)] = np.arange(L)
    qs = [c for comp in residual for c in ([comp] if isinstance(comp, int) else comp.verts)]
    qa, qb = cross_pairs(points, qs, master)
    qb = pos[qb]
    order = np.lexsort((qb, qa))
    qa, qb = qa[order], qb[order]
    keys, starts = np.unique(qa, return_index=True)
    empty = np.empty(0, dtype=np.int64)
    out = dict.fromkeys(qs, empty)
    for k, part in zip(keys.tolist(), np.split(qb, starts[1:]) if qa.size else []):
        out[k] = part
    return out


def _fallback_pass(master, residual, points, validate):
    """One greedy sweep: give each residual component at most one free master
    edge whose endpoints are adjacent to the component's ends."""
    adj = _master_adjacency(master, residual, points)
    L = len(master)
    claimed = np.zeros(L, dtype=bool)
    mark = np.zeros(L, dtype=bool)
    inserts = {}
    remaining = []

    def free_edges(pa, pb):
        # positions k with k adjacent-to-a and k+1 adjacent-to-b
        if not (pa.size and pb.size):
            return pa[:0]
        mark[(pb - 1) % L] = True
        hits = pa[mark[pa] & ~claimed[pa]]
        mark[(pb - 1) % L] = False
        return hits

    for comp in residual:
        placed = False
        if isinstance(comp, int):
            p = adj[comp]
            hits = free_edges(p, p)
            if hits.size:
                k = int(hits.min())
                claimed[k] = True
                inserts[k] = [comp]
                placed = True
        else:
            cv = comp.verts
            for t in range(len(cv)):
                pa, pb = adj[cv[t]], adj[cv[(t + 1) % len(cv)]]
                hits = free_edges(pa, pb)
                if hits.size:
                    k = int(hits.min())
                    claimed[k] = True
                    inserts[k] = _open_at(cv, t)
                    placed = True
                    break
                hits = free_edges(pb, pa)
                if hits.size:
                    k = int(hits.min())
                    claimed[k] = True
                    inserts[k] = _open_at(cv, t)[::-1]
                    placed = True
                    break
        if not placed:
            remaining.append(comp)
    if not inserts:
        return master, remaining, 0
    out, ea, eb = [], [], []
    for k in range(L):
        out.append(master[k])
        path = inserts.get(k)
        if path is not None:
            out.extend(path)
            ea += [master[k], path[-1]]
            eb += [path[0], master[(k + 1) % L]]
    if validate:
        _check_edges(points, ea, eb, "fallback splice")
    return out, remaining, len(inserts)


def construct(points, validate: bool = True, check_invariants: bool = True,
              max_fallback_passes: int = 50) -> HamResult:
    """Run the layered procedure on ``points`` and return a HamResult."""
    n = len(points)
    stats = {"tiles_processed": 0, "bound_checks": 0, "absorbed_per_layer": [],
             "fallback_passes": 0, "fallback_inserted": 0}
    if n < 3:
        return HamResult("failure", None, [[i] for i in range(n)], None, stats,
                         reason="too few vertices")
    tc = tile_counts(points)
    dt = demands(tc)
    geo = tc.geo
    covers: dict[int, CycleCover] = {}
    for i in range(geo.i_max + 1):
        occ = dt.tiles[i]
        pos = np.searchsorted(tc.tiles[i], occ)
        has = np.zeros(occ.size, dtype=bool)
        if tc.tiles[i].size:
            pc = np.minimum(pos, tc.tiles[i].size - 1)
            has = tc.tiles[i][pc] == occ
        absorbed = 0
        new: dict[int, CycleCover] = {}
        for j, d, h in zip(occ.tolist(), dt.values[i].tolist(), has.tolist()):
            tile = TileIndex(i, j)
            kids = [covers.pop(2 * j, None), covers.pop(2 * j + 1, None)] if i else []
            tv = tc.members(i, j).tolist() if h else []
            before = sum(len(c) for c in kids if c is not None)
            if not tv and sum(c is not None for c in kids) == 1:
                cover = next(c for c in kids if c is not None)
                cover.region = tile
                if check_invariants:
                    check_cover(cover, tile, d)
            else:
                cover = process_tile(kids, tile, tv, points,
                                     d if check_invariants else None, validate)
            if check_invariants:
                stats["bound_checks"] += 1
            absorbed += max(before + len(tv) - len(cover), 0) if tv else 0
            new[j] = cover
        stats["tiles_processed"] += int(occ.size)
        stats["absorbed_per_layer"].append(absorbed)
        covers = new

    top = geo.i_max
    clear = dt.top_layer_clear()
    master, edge, residual = None, None, []
    for j in sorted(covers):
        for comp in covers[j].components():
            chainable = (not isinstance(comp, int) and comp.spare
                         and comp.tile is not None and comp.tile.i == top)
            if not chainable:
                residual.append(comp)
            elif master is None:
                master, edge = list(comp.verts), comp.spare[0]
            else:
                path = _open_at_edge(comp.verts, comp.spare[0])
                master, edge = _splice(master, edge, path, points, validate)
    inner = sorted(tc.inner_disk_points.tolist())
    if inner:
        if master is not None:
            master, edge = _splice(master, edge, inner, points, validate)
        elif len(inner) >= 3:
            master, edge = inner, (inner[0], inner[1])
            if validate:
                _check_edges(points, inner, inner[1:] + inner[:1], "inner cycle")
        else:
            residual.extend(inner)

    fallback = bool(residual)
    if clear and fallback:
        raise CoverBoundError("all top-layer demands are zero but components remain")
    if fallback and master is None:
        cycles = [c for c in residual if not isinstance(c, int)]
        if cycles:
            best = min(cycles, key=lambda c: (-len(c), c.lo))
            residual = [c for c in residual if c is not best]
            master = list(best.verts)
    if fallback and master is not None:
        passes = 0
        while residual and passes < max_fallback_passes:
            master, residual, placed = _fallback_pass(master, residual, points, validate)
            passes += 1
            stats["fallback_inserted"] += placed
            if not placed:
                break
        stats["fallback_passes"] = passes

    if not residual and master is not None and len(master) == n:
        return HamResult("success", master, [], dt, stats, fallback_used=fallback)
    res = [[c] if isinstance(c, int) else list(c.verts) for c in residual]
    if master is not None:
        res.insert(0, list(master))
    return HamResult("failure", None, res, dt, stats, fallback_used=fallback,
                     reason="unmergeable components remain")


# --- verification and export ------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def verify_cycle(points, cycle) -> Verdict:
    """Independent Hamilton cycle check using only the geometric predicate."""
    n = len(points)
    seq = np.asarray(list(cycle), dtype=np.int64)
    if seq.size < 3:
        return Verdict(False, "cycle shorter than 3")
    if seq.min() < 0 or seq.max() >= n:
        return Verdict(False, f"unknown vertex id {int(seq.min() if seq.min() < 0 else seq.max())}")
    seen = np.bincount(seq, minlength=n)
    if np.any(seen > 1):
        return Verdict(False, f"duplicate vertex {int(np.argmax(seen > 1))}")
    if np.any(seen == 0):
        return Verdict(False, f"missing vertex {int(np.argmin(seen))}")
    nxt = np.roll(seq, -1)
    ok = adjacent_mask(points.r[seq], points.theta[seq], points.r[nxt], points.theta[nxt], points.R)
    if not np.all(ok):
        k = int(np.argmin(ok))
        return Verdict(False, f"non-edge {int(seq[k])}-{int(nxt[k])}")
    return Verdict(True)


def format_cycle(cycle) -> str:
    return " ".join(str(int(v)) for v in cycle) + "\n"


def write_cycle(cycle, path) -> None:
    Path(path).write_text(format_cycle(cycle))


def read_cycle(path) -> list[int]:
    return [int(tok) for tok in Path(path).read_text().split()]


def write_certificate(result: HamResult, path) -> None:
    Path(path).write_text(json.dumps(result.certificate(), indent=2) + "\n")

