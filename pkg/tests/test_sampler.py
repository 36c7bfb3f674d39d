import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from kpkvb.sampler import (ModelParams, PointSet, format_pointset, make_rng, measure_disk,
                           parse_pointset, poisson_variate, radial_cdf, radial_inverse_cdf,
                           read_pointset, sample, sample_binomial, sample_point,
                           sample_poisson, write_pointset)


def radial_density(r, alpha, R):
    return alpha * math.sinh(alpha * r) / (math.cosh(alpha * R) - 1)


class TestModelParams:
    def test_radius(self):
        assert ModelParams(1000, 0.3, 10).R == pytest.approx(2 * math.log(100))

    @pytest.mark.parametrize("args", [(0, 0.3, 1), (10, 0.3, 10), (10, -0.3, 1), (10, 0.3, 0), (2.5, 0.3, 1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            ModelParams(*args)

    def test_frozen(self):
        p = ModelParams(100, 0.3, 1)
        with pytest.raises(AttributeError):
            p.n = 5


class TestRadialLaw:
    def test_inverse_at_zero(self):
        assert radial_inverse_cdf(0.0, 0.3, 10.0) == 0.0

    def test_inverse_near_one(self):
        r = radial_inverse_cdf(1 - 1e-16, 0.3, 10.0)
        assert 9.99 < r < 10.0

    def test_median_example(self):
        want = math.acosh(1 + 0.5 * (math.cosh(10) - 1))
        assert radial_inverse_cdf(0.5, 1.0, 10.0) == pytest.approx(want, rel=1e-13)
        assert want == pytest.approx(9.3069, abs=1e-4)

    def test_median_by_quadrature(self):
        r = radial_inverse_cdf(0.5, 1.0, 10.0)
        mass, _ = integrate.quad(radial_density, 0, r, args=(1.0, 10.0))
        assert mass == pytest.approx(0.5, abs=1e-10)

    @given(st.floats(0.05, 2.0), st.floats(1.0, 60.0), st.floats(0.0, 0.999999))
    def test_round_trip(self, alpha, R, u):
        r = radial_inverse_cdf(u, alpha, R)
        assert 0 <= r < R
        assert radial_cdf(r, alpha, R) == pytest.approx(u, abs=1e-9)

    @pytest.mark.parametrize("u", [-0.1, 1.0, 1.5])
    def test_rejects(self, u):
        with pytest.raises(ValueError):
            radial_inverse_cdf(u, 0.3, 10.0)

    def test_cdf_by_quadrature(self):
        for r in (1.0, 5.0, 9.0):
            mass, _ = integrate.quad(radial_density, 0, r, args=(0.7, 10.0))
            assert radial_cdf(r, 0.7, 10.0) == pytest.approx(mass, rel=1e-10)


class TestSamplePoint:
    def test_pinned(self):
        p = sample_point(make_rng(12345), ModelParams(1000, 0.3, 1))
        assert (p.r, p.theta) == (9.206291362266787, 1.9902513459909192)

    def test_radial_and_angular_law(self):
        rng = make_rng(99)
        R, m = 10.0, 10**6
        r = radial_inverse_cdf(rng.random(m), 1.0, R)
        theta = 2 * np.pi * rng.random(m)
        p = (math.cosh(R - 2) - 1) / (math.cosh(R) - 1)
        emp = np.mean(r <= R - 2)
        assert abs(emp - p) < 3 * math.sqrt(p * (1 - p) / m)
        c = np.cos(theta)
        assert abs(c.mean()) < 3 * c.std() / math.sqrt(m)


class TestBinomial:
    def test_cardinality_and_range(self):
        ps = sample_binomial(ModelParams(100, 0.3, 1), 7)
        assert len(ps) == 100
        assert np.all((ps.r >= 0) & (ps.r < ps.R))
        assert np.all(np.diff(ps.theta) >= 0)

    def test_deterministic(self):
        p = ModelParams(100, 0.3, 1)
        assert sample_binomial(p, 7) == sample_binomial(p, 7)
        assert sample_binomial(p, 7) != sample_binomial(p, 8)

    def test_empty(self):
        ps = sample_binomial(ModelParams(100, 0.3, 1), 7, size=0)
        assert len(ps) == 0

    def test_read_only(self):
        ps = sample_binomial(ModelParams(50, 0.3, 1), 1)
        with pytest.raises(ValueError):
            ps.r[0] = 1.0


class TestPoisson:
    def test_inversion_moments(self):
        rng = make_rng(5)
        z = np.array([poisson_variate(rng, 12.5) for _ in range(20000)])
        assert abs(z.mean() - 12.5) < 3 * math.sqrt(12.5 / z.size)

    def test_count_moments(self):
        p = ModelParams(50, 0.3, 1)
        z = np.array([len(sample_poisson(p, s)) for s in range(10**4)])
        assert abs(z.mean() - 50) < 3 * math.sqrt(50 / z.size)
        assert z.var(ddof=1) == pytest.approx(50, rel=0.1)

    def test_deterministic(self):
        p = ModelParams(500, 0.3, 1)
        assert sample_poisson(p, 3) == sample_poisson(p, 3)

    def test_disjoint_sectors_uncorrelated(self):
        p = ModelParams(50, 0.3, 1)
        a, b = [], []
        for s in range(10**4):
            t = sample_poisson(p, s).theta
            a.append(np.count_nonzero(t < 1.0))
            b.append(np.count_nonzero((t >= 2.0) & (t < 3.0)))
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_dispatch(self):
        p = ModelParams(200, 0.3, 1)
        assert sample(p, 1, "binomial") == sample_binomial(p, 1)
        assert sample(p, 1, "poisson") == sample_poisson(p, 1)
        with pytest.raises(ValueError):
            sample(p, 1, "lattice")


class TestMeasure:
    def test_whole_and_empty(self):
        p = ModelParams(1000, 0.3, 1)
        assert measure_disk(p.R, p) == pytest.approx(1000)
        assert measure_disk(0, p) == 0

    def test_outer_annulus_asymptote(self):
        p = ModelParams(10**7, 0.3, 0.5)  # R > 30
        assert p.R > 30
        assert measure_disk(p.R - 1 / p.alpha, p) == pytest.approx(p.n / math.e, rel=0.01)

    def test_rejects(self):
        p = ModelParams(1000, 0.3, 1)
        with pytest.raises(ValueError):
            measure_disk(p.R + 1, p)


class TestFiles:
    def test_round_trip(self, tmp_path):
        ps = sample_poisson(ModelParams(300, 0.3, 2), 11)
        path = tmp_path / "pts.txt"
        write_pointset(ps, path)
        assert read_pointset(path) == ps

    def test_header_fields(self):
        ps = sample_binomial(ModelParams(10, 0.3, 1), 4)
        head = format_pointset(ps).splitlines()[0]
        assert head.startswith("# kpkvb v1 model=binomial n=10 ")
        assert "seed=4" in head and "count=10" in head

    def test_count_mismatch(self):
        text = format_pointset(sample_binomial(ModelParams(10, 0.3, 1), 4))
        with pytest.raises(ValueError):
            parse_pointset("\n".join(text.splitlines()[:-1]))

    def test_bad_header(self):
        with pytest.raises(ValueError):
            parse_pointset("0 1.0 2.0\n")

    def test_pointset_validation(self):
        p = ModelParams(10, 0.3, 1)
        with pytest.raises(ValueError):
            PointSet([p.R], [0.0], p, 0, "poisson")
        with pytest.raises(ValueError):
            PointSet([1.0], [7.0], p, 0, "poisson")
