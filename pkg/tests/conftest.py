"""Shared fixtures.

Several test modules exercise the same coefficient set at the default
resolution, and each solve costs around a second, so solver outputs are
cached for the whole session keyed by spec and configuration.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from fragstat.closed_form import closed_form_eval, normalize
from fragstat.kernels import CoefficientSpec, DaughterSpec, RateSpec
from fragstat.solver import (
    SizeDistribution,
    SolverConfig,
    build_grid,
    solve_conservative,
    solve_nullspace,
)


def power_law_spec(gamma: float, nu: float, amplitude: float = 1.0) -> CoefficientSpec:
    return CoefficientSpec(
        rate=RateSpec(amplitude, gamma),
        daughter=DaughterSpec("power_law", nu=nu),
    )


def log_power_spec(theta: float = 0.5) -> CoefficientSpec:
    return CoefficientSpec(
        rate=RateSpec(1.0, 0.0),
        daughter=DaughterSpec("log_power", theta=theta),
    )


# the pairs every solver-level suite runs: the closed-form family across
# the admissible homogeneity range plus the log-modified daughter
SHIPPED_SPECS = (
    ("power_0_0", power_law_spec(0.0, 0.0)),
    ("power_1_0", power_law_spec(1.0, 0.0)),
    ("power_2_0", power_law_spec(2.0, 0.0)),
    ("power_0_m1", power_law_spec(0.0, -1.0)),
    ("power_0_m15", power_law_spec(0.0, -1.5)),
    ("log_half", log_power_spec(0.5)),
)

def closed_form_samples(gamma: float, nu: float, n: int = 2048):
    """Exact closed-form samples packaged as a distribution on the grid
    the solver would use."""
    spec = power_law_spec(gamma, nu)
    grid = build_grid(spec, SolverConfig(n=n))
    vals = closed_form_eval(normalize(1.0, gamma, nu), grid.nodes)
    dist = SizeDistribution(
        grid=grid, values=vals, m1=1.0, method="samples",
        residual_balance=0.0, residual_flux=0.0,
    )
    return spec, dist


_SOLVE_CACHE: dict = {}


@pytest.fixture(scope="session")
def cached_solve():
    """Memoized solver entry point shared across test modules."""

    def run(spec, n=2048, formulation="second_order", x_max=None, tail_tol=1e-12):
        key = (spec, n, formulation, x_max, tail_tol)
        try:
            hit = key in _SOLVE_CACHE
        except TypeError:
            hit = False
            key = None
        if hit:
            return _SOLVE_CACHE[key]
        config = SolverConfig(n=n, x_max=x_max, tail_tol=tail_tol)
        if formulation == "conservative":
            out = solve_conservative(spec, config)
        else:
            out = solve_nullspace(spec, config)
        if key is not None:
            _SOLVE_CACHE[key] = out
        return out

    return run


@pytest.fixture(scope="session")
def shipped_spec_paths():
    paths = sorted((Path(__file__).resolve().parent.parent / "specs").glob("*.cfg"))
    assert paths, "no shipped spec files found"
    return paths
