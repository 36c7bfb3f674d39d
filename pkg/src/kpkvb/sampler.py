"""Vertex sets for the binomial and Poissonized KPKVB models.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``. Both are platform independent and stable across numpy
releases, so a (params, seed, model) triple always regenerates the same set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import TWO_PI, PolarPoint

MODEL_KINDS = ("binomial", "poisson")
FORMAT_TAG = "kpkvb v1"
# below this mean the Poisson count is drawn by sequential inversion
POISSON_INVERSION_MAX = 30


@dataclass(frozen=True)
class ModelParams:
    n: int
    alpha: float
    nu: float
    R: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.n > self.nu:
            raise ValueError(f"need n > nu (got n={self.n}, nu={self.nu})")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "R", 2.0 * math.log(self.n / self.nu))


class PointSet:
    """Immutable, angle-sorted vertex set. Vertex ids are array positions."""

    def __init__(self, r, theta, params: ModelParams, seed: int, model_kind: str):
        if model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {model_kind!r}")
        r = np.array(r, dtype=float)
        theta = np.array(theta, dtype=float)
        if r.shape != theta.shape or r.ndim != 1:
            raise ValueError("r and theta must be 1-d arrays of equal length")
        if r.size and (r.min() < 0 or r.max() >= params.R):
            raise ValueError("every point needs 0 <= r < R")
        if theta.size and (theta.min() < 0 or theta.max() >= TWO_PI):
            raise ValueError("angles must lie in [0, 2pi)")
        r.flags.writeable = False
        theta.flags.writeable = False
        self.r = r
        self.theta = theta
        self.params = params
        self.seed = int(seed)
        self.model_kind = model_kind

    @property
    def R(self) -> float:
        return self.params.R

    def __len__(self):
        return self.r.size

    def __getitem__(self, i) -> PolarPoint:
        return PolarPoint(self.r[i], self.theta[i])

    @property
    def points(self) -> list[PolarPoint]:
        return [PolarPoint(a, b) for a, b in zip(self.r, self.theta)]

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and self.model_kind == other.model_kind
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.theta, other.theta)
        )

    def header(self) -> str:
        p = self.params
        return (
            f"# {FORMAT_TAG} model={self.model_kind} n={p.n} alpha={p.alpha!r} "
            f"nu={p.nu!r} R={p.R!r} seed={self.seed} count={len(self)}"
        )


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def radial_inverse_cdf(u, alpha, R):
    """Inverse of the radial CDF (cosh(alpha r) - 1) / (cosh(alpha R) - 1)."""
    ua = np.asarray(u, dtype=float)
    if np.any(ua < 0) or np.any(ua >= 1):
        raise ValueError("u must lie in [0, 1)")
    if not (alpha > 0 and R > 0):
        raise ValueError("alpha and R must be positive")
    # cosh(x) - 1 = 2 sinh^2(x/2);  arcosh(1 + y) = log1p(y + sqrt(y (y + 2)))
    y = ua * (2.0 * np.sinh(0.5 * alpha * R) ** 2)
    r = np.log1p(y + np.sqrt(y * (y + 2.0))) / alpha
    r = np.minimum(r, np.nextafter(R, 0.0))
    return r if np.ndim(r) else float(r)


def radial_cdf(r, alpha, R):
    return np.sinh(0.5 * alpha * np.asarray(r)) ** 2 / np.sinh(0.5 * alpha * R) ** 2


def sample_point(rng: np.random.Generator, params: ModelParams) -> PolarPoint:
    u = rng.random()
    t = rng.random()
    return PolarPoint(radial_inverse_cdf(u, params.alpha, params.R), TWO_PI * t)


def _draw(rng, params, count):
    r = radial_inverse_cdf(rng.random(count), params.alpha, params.R)
    theta = TWO_PI * rng.random(count)
    return r, theta


def _sorted_pointset(r, theta, params, seed, kind):
    order = np.lexsort((r, theta))
    return PointSet(r[order], theta[order], params, seed, kind)


def sample_binomial(params: ModelParams, seed: int, size: int | None = None) -> PointSet:
    """Exactly ``params.n`` i.i.d. quasi-uniform points (``size`` overrides)."""
    rng = make_rng(seed)
    count = params.n if size is None else int(size)
    r, theta = _draw(rng, params, count)
    return _sorted_pointset(r, theta, params, seed, "binomial")


def poisson_variate(rng: np.random.Generator, mean: float) -> int:
    if mean < POISSON_INVERSION_MAX:
        u = rng.random()
        k = 0
        p = math.exp(-mean)
        cdf = p
        while u > cdf and p > 0:
            k += 1
            p *= mean / k
            cdf += p
        return k
    # numpy uses Hormann's transformed rejection (PTRS) in this range
    return int(rng.poisson(mean))


def sample_poisson(params: ModelParams, seed: int) -> PointSet:
    rng = make_rng(seed)
    z = poisson_variate(rng, params.n)
    r, theta = _draw(rng, params, z)
    return _sorted_pointset(r, theta, params, seed, "poisson")


def sample(params: ModelParams, seed: int, model_kind: str = "poisson") -> PointSet:
    if model_kind == "binomial":
        return sample_binomial(params, seed)
    if model_kind == "poisson":
        return sample_poisson(params, seed)
    raise ValueError(f"unknown model kind {model_kind!r}")


def measure_disk(rho: float, params: ModelParams) -> float:
    """Expected number of Poisson points with radius below rho."""
    if not 0 <= rho <= params.R:
        raise ValueError("rho must lie in [0, R]")
    a = params.alpha
    return params.n * math.sinh(0.5 * a * rho) ** 2 / math.sinh(0.5 * a * params.R) ** 2


# --- point-set files ---------------------------------------------------------

def _parse_header(line: str) -> dict:
    prefix = f"# {FORMAT_TAG} "
    if not line.startswith(prefix):
        raise ValueError(f"not a {FORMAT_TAG} point-set file")
    fields = dict(tok.split("=", 1) for tok in line[len(prefix):].split())
    missing = {"model", "n", "alpha", "nu", "R", "seed", "count"} - fields.keys()
    if missing:
        raise ValueError(f"header lacks {sorted(missing)}")
    return fields


def format_pointset(ps: PointSet) -> str:
    lines = [ps.header()]
    lines += [f"{i} {r:.17g} {t:.17g}" for i, (r, t) in enumerate(zip(ps.r, ps.theta))]
    return "\n".join(lines) + "\n"


def write_pointset(ps: PointSet, path) -> None:
    Path(path).write_text(format_pointset(ps))


def parse_pointset(text: str) -> PointSet:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty point-set file")
    h = _parse_header(lines[0])
    params = ModelParams(int(h["n"]), float(h["alpha"]), float(h["nu"]))
    count = int(h["count"])
    body = [ln.split() for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
    if len(body) != count:
        raise ValueError(f"header announces {count} points, found {len(body)}")
    r = np.array([float(b[1]) for b in body], dtype=float)
    theta = np.array([float(b[2]) for b in body], dtype=float)
    if any(int(b[0]) != i for i, b in enumerate(body)):
        raise ValueError("point ids must be 0..count-1 in order")
    return PointSet(r, theta, params, int(h["seed"]), h["model"])


def read_pointset(path) -> PointSet:
    return parse_pointset(Path(path).read_text())
