import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kpkvb.geometry import TWO_PI
from kpkvb.hamilton import (CoverBoundError, Cycle, CycleCover, SpliceError, check_cover,
                            construct, demand_recursion, demands, empty_subtree_demand,
                            merge_into_tile_cycle, process_tile, read_cycle, verify_cycle,
                            write_certificate, write_cycle)
from kpkvb.sampler import ModelParams, sample_binomial, sample_poisson
from kpkvb.tiling import BAND, TileIndex, layer_geometry, tile_counts

from conftest import make_points

# layer i_max has a non-empty radial band for this R, so every tile can be filled
R_FILLABLE = 5.5 * BAND


def tiled_points(counts_fn, rng, R=R_FILLABLE, inner=0):
    """Points placed tile by tile; counts_fn(i, j) gives the count of T_{i,j}."""
    geo = layer_geometry(R)
    r, th = [], []
    for i in range(geo.i_max + 1):
        lo, hi = geo.band(i)
        w = TWO_PI / geo.n(i)
        for j in range(geo.n(i)):
            k = counts_fn(i, j)
            r.extend(lo + (hi - lo) * rng.uniform(0.01, 0.99, k))
            th.extend(w * (j + rng.uniform(0.01, 0.99, k)))
    r.extend(rng.uniform(0, geo.inner_radius or 0.0, inner))
    th.extend(rng.uniform(0, TWO_PI, inner))
    return make_points(r, th, R=R, n=10**6)


class TestDemands:
    def test_base_layer(self):
        out = demand_recursion([[0, 1, 2, 3, 7, 0, 0, 0], [0] * 4])
        assert out[0][:5].tolist() == [0, 1, 2, 0, 0]

    def test_recursion_examples(self):
        assert demand_recursion([[1, 0], [5]])[1][0] == 0
        assert demand_recursion([[0, 0], [0]])[1][0] == 3

    def test_empty_subtree_closed_form(self):
        counts = [[0] * 2**(5 - i) for i in range(6)]
        out = demand_recursion(counts)
        for i in range(6):
            assert set(out[i].tolist()) == {empty_subtree_demand(i)}

    def test_sparse_matches_dense_oracle(self):
        for seed in range(20):
            ps = sample_poisson(ModelParams(3000, 0.3, 2 + seed), seed)
            tc = tile_counts(ps)
            dt = demands(tc)
            dense = demand_recursion([tc.dense(i) for i in range(tc.geo.i_max + 1)])
            for i, d in enumerate(dense):
                assert np.array_equal(dt.dense(i), d)

    def test_tail_counts(self):
        ps = sample_poisson(ModelParams(2000, 0.3, 8), 1)
        dt = demands(tile_counts(ps))
        for i in range(dt.i_max + 1):
            d = dt.dense(i)
            tail = dt.tail_counts(i, 6)
            assert tail.tolist() == [int(np.sum(np.minimum(d, 6) >= t)) for t in range(7)]


def inner_points(k, rng):
    """k points near the origin: all pairwise adjacent."""
    return rng.uniform(0, 1, k), rng.uniform(0, TWO_PI, k)


class TestMerge:
    @pytest.fixture
    def clique(self, rng):
        r, th = inner_points(12, rng)
        return make_points(r, th, R=10.0)

    def test_nothing_below(self, clique):
        out = merge_into_tile_cycle(CycleCover(), [0, 1, 2], clique)
        assert len(out) == 1
        assert len(out.cycles[0].spare) == 3

    def test_cycle_and_singleton(self, clique):
        below = CycleCover([Cycle([3, 4, 5])], [6])
        out = merge_into_tile_cycle(below, [0, 1, 2], clique)
        assert len(out) == 1 and len(out.cycles[0].spare) == 1
        assert sorted(out.cycles[0].verts) == [0, 1, 2, 3, 4, 5, 6]

    def test_more_components_than_tile_points(self, clique):
        below = CycleCover([Cycle([3, 4, 5])], [6, 7, 8, 9])
        out = merge_into_tile_cycle(below, [0, 1, 2], clique)
        assert len(out) == 3
        assert out.cycles[0].spare == []
        assert sorted(out.vertex_ids()) == list(range(10))

    def test_pickup_order(self, clique):
        below = CycleCover([Cycle([9, 10, 11]), Cycle([3, 4, 5])], [6, 7])
        out = merge_into_tile_cycle(below, [0, 1, 2], clique)
        assert out.cycles[0].verts[:4] == [0, 3, 5, 4] or out.cycles[0].verts[:4] == [0, 3, 4, 5]
        assert out.singletons == [7]

    def test_rejects_small_tile(self, clique):
        with pytest.raises(ValueError):
            merge_into_tile_cycle(CycleCover(), [0, 1], clique)

    def test_rejects_non_edges(self):
        ps = make_points([9.9, 9.9, 9.9], [0.0, 2.0, 4.0], R=10.0)
        with pytest.raises(SpliceError):
            merge_into_tile_cycle(CycleCover(), [0, 1, 2], ps)


class TestProcessTile:
    @pytest.fixture
    def clique(self, rng):
        r, th = inner_points(10, rng)
        return make_points(r, th, R=10.0)

    def test_empty_tile_empty_children(self, clique):
        out = process_tile([None, None], TileIndex(1, 0), [], clique, demand=3)
        assert len(out) == 0

    def test_four_points_two_components(self, clique):
        kids = [CycleCover([Cycle([4, 5, 6])]), CycleCover([], [7])]
        out = process_tile(kids, TileIndex(1, 0), [0, 1, 2, 3], clique, demand=0)
        assert len(out) == 1 and len(out.cycles[0].spare) == 2

    def test_two_points_one_cycle(self, clique):
        kids = [CycleCover([Cycle([4, 5, 6])]), None]
        out = process_tile(kids, TileIndex(1, 0), [0, 1], clique, demand=1)
        assert len(out) == 1
        assert sorted(out.cycles[0].verts) == [0, 1, 4, 5, 6]

    def test_two_points_glue_two_components(self, clique):
        kids = [CycleCover([Cycle([4, 5, 6])]), CycleCover([], [7])]
        out = process_tile(kids, TileIndex(1, 0), [0, 1], clique, demand=1)
        assert len(out) == 1

    def test_one_point_splice(self, clique):
        kids = [CycleCover([Cycle([4, 5, 6])], [8]), None]
        out = process_tile(kids, TileIndex(1, 0), [0], clique)
        assert len(out) == 2

    def test_one_point_triangle(self, clique):
        kids = [CycleCover([], [7, 8]), None]
        out = process_tile(kids, TileIndex(1, 0), [0], clique)
        assert len(out.cycles) == 1 and sorted(out.cycles[0].verts) == [0, 7, 8]

    def test_bound_violation_detected(self):
        cover = CycleCover([], [1, 2, 3])
        with pytest.raises(CoverBoundError):
            check_cover(cover, TileIndex(1, 0), 1)
        with pytest.raises(CoverBoundError):
            check_cover(CycleCover([Cycle([1, 2, 3])]), TileIndex(1, 0), 0)


class TestConstruct:
    def test_empty(self):
        ps = sample_binomial(ModelParams(100, 0.3, 1), 0, size=0)
        res = construct(ps)
        assert not res.success and res.reason == "too few vertices"

    def test_clear_top_layer_succeeds(self, rng):
        ps = tiled_points(lambda i, j: 3, rng, inner=0)
        res = construct(ps)
        assert res.demand_table.top_layer_clear()
        assert res.success and not res.fallback_used
        assert verify_cycle(ps, res.cycle)

    @given(st.integers(0, 2**32 - 1))
    def test_fuzzed_cover_bound(self, seed):
        rng = np.random.default_rng(seed)
        # typical count `base`, jittered by up to `spread`; covers N = 0, 1, 2 and >= 3
        base, spread = int(rng.integers(1, 7)), int(rng.integers(0, 4))
        ps = tiled_points(lambda i, j: max(0, base + int(rng.integers(-spread, spread + 1))),
                          rng, inner=int(rng.integers(0, 4)))
        res = construct(ps)  # raises CoverBoundError on any violated bound
        assert res.stats["bound_checks"] == res.stats["tiles_processed"]
        if res.demand_table.top_layer_clear():
            assert res.success and not res.fallback_used
        if res.success:
            assert verify_cycle(ps, res.cycle)

    def test_random_instances_verify(self):
        hits = 0
        for seed in range(200):
            n = 300 + 10 * seed
            ps = sample_poisson(ModelParams(n, 0.3, 16 + seed % 32), seed)
            res = construct(ps)
            if res.success:
                hits += 1
                assert verify_cycle(ps, res.cycle), seed
        assert hits > 100

    def test_deterministic(self):
        ps = sample_poisson(ModelParams(3000, 0.3, 16), 8)
        a, b = construct(ps), construct(ps)
        assert a.status == b.status and a.cycle == b.cycle and a.residual == b.residual

    def test_failure_certificate(self, tmp_path):
        ps = sample_poisson(ModelParams(2000, 0.3, 0.2), 2)
        res = construct(ps)
        assert not res.success
        cert = res.certificate()
        assert cert["status"] == "failure" and cert["residual_components"]
        assert all(d > 0 for _, _, d in cert["demand_nonzero_tiles"])
        path = tmp_path / "cert.json"
        write_certificate(res, path)
        assert json.loads(path.read_text())["status"] == "failure"


class TestVerifyCycle:
    @pytest.fixture
    def tri(self):
        return make_points([1.0, 1.0, 1.0, 9.9], [0, 2, 4, 3.0], R=10.0)

    def test_triangle(self):
        ps = make_points([1.0, 1.0, 1.0], [0, 2, 4], R=10.0)
        assert verify_cycle(ps, [0, 1, 2])

    def test_missing_vertex(self, tri):
        v = verify_cycle(tri, [0, 1, 2])
        assert not v and v.reason.startswith("missing vertex")

    def test_duplicate_and_short(self, tri):
        assert verify_cycle(tri, [0, 1, 1, 2]).reason.startswith("duplicate vertex")
        assert verify_cycle(tri, [0, 1]).reason == "cycle shorter than 3"

    def test_non_edge(self):
        ps = make_points([9.9, 9.9, 1.0], [0.0, math.pi, 1.0], R=10.0)
        v = verify_cycle(ps, [0, 1, 2])
        assert not v and v.reason.startswith("non-edge")

    def test_cycle_file_round_trip(self, tmp_path):
        write_cycle([3, 1, 2], tmp_path / "c.txt")
        assert read_cycle(tmp_path / "c.txt") == [3, 1, 2]
