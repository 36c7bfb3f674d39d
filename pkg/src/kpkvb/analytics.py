"""Closed-form constants and bounds for the matching phase.

With s = 1/alpha, the expected number of outer vertices (r >= R - s) that
have no outer neighbour is at least n exp(-nu c_alpha) (1 - 1/e), while the
expected number of inner vertices (r < R - s) tends to n/e. For nu below
nu0_bound the first exceeds the second, which drives the obstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .sampler import ModelParams, measure_disk

_NU0_NUMERATOR = 1.0 + math.log1p(-math.exp(-1.0))  # 1 + ln(1 - 1/e), about 0.5413


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")


def c_alpha(alpha: float) -> float:
    """e^{1/(2a)} a / (pi (1/2 - a)) (e^{1/(2a) - 1} - 1)."""
    _check_alpha(alpha)
    x = 0.5 / alpha - 1.0
    # expm1 keeps the (e^x - 1)/(1/2 - a) ratio accurate as a -> 1/2
    return math.exp(0.5 / alpha) * alpha / (math.pi * (0.5 - alpha)) * math.expm1(x)


def outer_ball_constant(alpha: float) -> float:
    """Limit of mu(outer part of the ball around (R - s, 0)) / nu, equal to 2 c_alpha.

    The ball spans the angular width 2 theta_R ~ 4 e^{(R-r-r')/2}, so the
    radial integrand has prefactor 2 alpha / pi, twice the alpha / pi that
    the closed form of c_alpha is built on.
    """
    return 2.0 * c_alpha(alpha)


def nu0_bound(alpha: float) -> float:
    """Boundary nu with e^{-1} = e^{-nu c_alpha} (1 - e^{-1})."""
    return _NU0_NUMERATOR / c_alpha(alpha)


def nu0_sufficient(alpha: float) -> float:
    """Same boundary with the exact ball constant; below it E N_s > E M_s holds
    for large n without relying on c_alpha."""
    return _NU0_NUMERATOR / outer_ball_constant(alpha)


def ENs_lower(params: ModelParams) -> float:
    _check_alpha(params.alpha)
    return params.n * math.exp(-params.nu * c_alpha(params.alpha)) * -math.expm1(-1.0)


def EMs(params: ModelParams) -> float:
    """Exact expected number of Poisson points with r < R - 1/alpha."""
    s = 1.0 / params.alpha
    if s >= params.R:
        raise ValueError("1/alpha must be below R")
    return measure_disk(params.R - s, params)


def H(a: float) -> float:
    """Rate function 1 - a + a ln a, extended by H(0) = 1."""
    if a < 0:
        raise ValueError("H needs a >= 0")
    return 1.0 - a + (a * math.log(a) if a > 0 else 0.0)


def chernoff_poisson_lower_tail(mu: float, k: float) -> float:
    """Upper bound exp(-mu H(k/mu)) on P(X <= k) for X ~ Poisson(mu)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not 0 < k <= mu:
        raise ValueError(f"need 0 < k <= mu, got k={k!r}, mu={mu!r}")
    return math.exp(-mu * H(k / mu))


def avg_degree_limit(alpha: float, nu: float) -> float:
    """Limiting average degree 2 a^2 nu / (pi (a - 1/2)^2), valid for a > 1/2."""
    if not alpha > 0.5:
        raise ValueError("the average-degree limit needs alpha > 1/2")
    return 2.0 * alpha * alpha * nu / (math.pi * (alpha - 0.5) ** 2)


@dataclass(frozen=True)
class PhaseConstants:
    alpha: float
    s: float
    c_alpha: float
    nu0_bound: float

    @classmethod
    def for_alpha(cls, alpha: float) -> "PhaseConstants":
        return cls(alpha, 1.0 / alpha, c_alpha(alpha), nu0_bound(alpha))

    def ENs_lower(self, nu: float, n: int) -> float:
        return ENs_lower(ModelParams(n, self.alpha, nu))

    def EMs(self, nu: float, n: int) -> float:
        return EMs(ModelParams(n, self.alpha, nu))


def constants_table(alphas, nus, n: int) -> list[dict]:
    """Rows of closed-form constants over an (alpha, nu) grid at fixed n."""
    rows = []
    for a in alphas:
        for nu in nus:
            row = {"alpha": a, "nu": nu, "n": n}
            if 0 < a < 0.5:
                pc = PhaseConstants.for_alpha(a)
                row.update(s=pc.s, c_alpha=pc.c_alpha, nu0_bound=pc.nu0_bound,
                           nu0_sufficient=nu0_sufficient(a), ENs_lower=pc.ENs_lower(nu, n))
                try:
                    row["EMs"] = pc.EMs(nu, n)
                except ValueError:
                    row["EMs"] = None
            if a > 0.5:
                row["avg_degree_limit"] = avg_degree_limit(a, nu)
            rows.append(row)
    return rows
