import numpy as np
import pytest
from hypothesis import settings

from kpkvb.sampler import ModelParams, PointSet

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def make_points(r, theta, R=10.0, alpha=0.3, n=None, model="binomial", seed=0):
    """PointSet from explicit coordinates, with nu chosen so that 2 ln(n/nu) = R."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float) % (2 * np.pi)
    n = n if n is not None else max(len(r), 1) * 1000
    params = ModelParams(n, alpha, n / np.exp(R / 2))
    order = np.lexsort((r, theta))
    return PointSet(r[order], theta[order], params, seed, model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def max_matching_size(n, edges):
    """Maximum matching size by exhaustive pairing search (oracle, n <= 12)."""
    adj = [0] * n
    for a, b in edges:
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    memo = {}

    def best(free):
        if free == 0:
            return 0
        if free in memo:
            return memo[free]
        v = (free & -free).bit_length() - 1
        rest = free & ~(1 << v)
        out = best(rest)  # v stays unmatched
        cand = adj[v] & rest
        while cand:
            u = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            out = max(out, 1 + best(rest & ~(1 << u)))
        memo[free] = out
        return out

    return best((1 << n) - 1)


def small_instances(count, seed=0):
    """Random binomial instances with 2..12 points and s = 1/alpha < R."""
    from kpkvb.sampler import sample_binomial

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 13))
        alpha = float(rng.uniform(0.1, 0.49))
        nu = float(np.exp(rng.uniform(np.log(1e-3), np.log(2.0))))
        if n <= nu:
            continue
        params = ModelParams(n, alpha, nu)
        if 1 / alpha >= params.R:
            continue
        out.append(sample_binomial(params, int(rng.integers(2**31))))
    return out


# --- acceptance report ----------------------------------------------------------

ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, ok, detail):
    """Store and print one acceptance verdict line."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
