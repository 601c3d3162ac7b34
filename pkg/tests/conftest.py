import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_subdivision(rng, ambient_dim, d, max_knots=6):
    """Random subdivision with `d` active variables out of `ambient_dim`."""
    from maxmodgp.basis import Subdivision

    active = sorted(rng.choice(ambient_dim, size=d, replace=False).tolist())
    knots = {}
    for a in active:
        m = int(rng.integers(2, max_knots + 1))
        inner = np.sort(rng.uniform(0.02, 0.98, size=m - 2))
        while m > 2 and np.min(np.diff(np.r_[0.0, inner, 1.0])) < 1e-3:
            inner = np.sort(rng.uniform(0.02, 0.98, size=m - 2))
        knots[a] = [0.0, *inner, 1.0]
    return Subdivision.from_knots(knots, ambient_dim)


def cell_quadrature(sub, integrand, rtol=1e-12):
    """Adaptive cubature of `integrand` (active coordinates) cell by cell over the grid of `sub`.

    The integrand is smooth inside each grid cell, so each cell converges quickly.
    """
    from scipy.integrate import cubature

    edges = [np.asarray(s.knots) for s in sub.per_dim]
    lo = np.stack(np.meshgrid(*[e[:-1] for e in edges], indexing="ij"), -1).reshape(-1, sub.d)
    hi = np.stack(np.meshgrid(*[e[1:] for e in edges], indexing="ij"), -1).reshape(-1, sub.d)
    total = 0.0
    for a, b in zip(lo, hi):
        res = cubature(integrand, a, b, rule="gk15", rtol=rtol, atol=1e-15)
        assert res.status == "converged"
        total += float(res.estimate)
    return total


def ambient_points(sub, Z):
    """Embed active-coordinate points `Z` of `sub` into ``[0, 1]^D`` (inactive inputs at 0.5)."""
    X = np.full((len(Z), sub.ambient_dim), 0.5)
    X[:, list(sub.active)] = np.clip(Z, 0.0, 1.0)
    return X


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str) -> bool:
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
