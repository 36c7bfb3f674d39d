"""Hyperbolic-plane kernels in polar coordinates.

Every routine works on scalars and on numpy arrays alike. Distances and the
critical angle are evaluated through half-angle identities,

    sinh^2(d/2) = sinh^2((r1-r2)/2) + sinh(r1) sinh(r2) sin^2(dtheta/2),

which are algebraically identical to the law of cosines but do not lose all
significant digits to cancellation once cosh(R) is of order 1e10 or more.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(normalize_angle(self.theta)))
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class CriticalAngleBounds:
    lower: float
    upper: float
    point_estimate: float


def normalize_angle(theta):
    """Map angles to [0, 2pi)."""
    t = np.mod(theta, TWO_PI)
    # mod can round up to exactly 2pi for tiny negative inputs
    t = np.where(t >= TWO_PI, 0.0, t)
    return t if np.ndim(t) else float(t)


def angular_distance(theta1, theta2):
    d = np.abs(normalize_angle(theta1) - normalize_angle(theta2))
    out = np.minimum(d, TWO_PI - d)
    return out if np.ndim(out) else float(out)


def _sin2_half_theta_R(r1, r2, R):
    """sin^2(theta_R/2); values >= 1 mean every separation is within R."""
    d = r1 - r2
    num = np.sinh(0.5 * (R + d)) * np.sinh(0.5 * (R - d))
    den = np.sinh(r1) * np.sinh(r2)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def critical_angle(r1, r2, R):
    """Unchecked, vectorised theta_R. Callers guarantee 0 <= r < R."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    q = _sin2_half_theta_R(r1, r2, R)
    full = (r1 + r2 <= R) | (q >= 1.0)
    with np.errstate(invalid="ignore"):
        th = 2.0 * np.arcsin(np.sqrt(np.clip(q, 0.0, 1.0)))
    return np.where(full, math.pi, th)


def theta_R(r1, r2, R):
    """Largest angular separation at which radii r1, r2 are within distance R.

    Returns pi when r1 + r2 <= R or either radius is zero.
    """
    r1a = np.asarray(r1, dtype=float)
    r2a = np.asarray(r2, dtype=float)
    if np.any(r1a < 0) or np.any(r2a < 0):
        raise ValueError("radii must be non-negative")
    if np.any(r1a >= R) or np.any(r2a >= R):
        raise ValueError("radii must be strictly below R")
    out = critical_angle(r1a, r2a, R)
    return out if np.ndim(out) else float(out)


def theta_R_asymptotic(r1, r2, R, K):
    """Two-sided band 2e^{x/2} -/+ K e^{3x/2}, x = R - r1 - r2 < 0."""
    x = R - r1 - r2
    if x >= 0:
        raise ValueError("asymptotic form needs r1 + r2 > R")
    est = 2.0 * math.exp(0.5 * x)
    err = K * math.exp(1.5 * x)
    return CriticalAngleBounds(lower=est - err, upper=est + err, point_estimate=est)


def distance_arrays(r1, t1, r2, t2):
    dth = angular_distance(t1, t2)
    s = np.sinh(0.5 * (np.asarray(r1) - np.asarray(r2))) ** 2
    s = s + np.sinh(r1) * np.sinh(r2) * np.sin(0.5 * np.asarray(dth)) ** 2
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(s, 0.0)))


def hyperbolic_distance(p1: PolarPoint, p2: PolarPoint) -> float:
    if p1.r < 0 or p2.r < 0:
        raise ValueError("radii must be non-negative")
    return float(distance_arrays(p1.r, p1.theta, p2.r, p2.theta))


def adjacent_mask(r1, t1, r2, t2, R):
    """Vectorised adjacency: angular distance <= theta_R(r1, r2).

    This is the single adjacency predicate of the package; graph builders,
    the Hamilton procedure and all verifiers route through it.
    """
    return np.asarray(angular_distance(t1, t2)) <= critical_angle(r1, r2, R)


def is_adjacent(p1: PolarPoint, p2: PolarPoint, R: float) -> bool:
    return bool(adjacent_mask(p1.r, p1.theta, p2.r, p2.theta, R))
