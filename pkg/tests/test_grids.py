"""Tests for graded node placement, quadrature weights, and stencils."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragstat.errors import DomainError
from fragstat.grids import (
    MIN_NODES,
    Grid,
    build_nodes,
    first_derivative,
    second_derivative,
    stretched_tail_cut,
    trapezoid_weights,
)


def grading_map(nodes: np.ndarray, x_max: float, alpha: float) -> np.ndarray:
    s = min(1.0, x_max / 4.0)
    return np.log(nodes) + (nodes / s) ** alpha / alpha


class TestGridValidation:
    def test_rejects_too_few_nodes(self):
        x = np.linspace(1.0, 2.0, MIN_NODES - 1)
        with pytest.raises(DomainError):
            Grid(nodes=x, weights=np.ones_like(x), grading="g")

    def test_rejects_nonpositive_origin(self):
        x = np.linspace(0.0, 2.0, 80)
        with pytest.raises(DomainError):
            Grid(nodes=x, weights=np.ones_like(x), grading="g")

    def test_rejects_non_monotone(self):
        x = np.linspace(1.0, 2.0, 80)
        x[40] = x[39]
        with pytest.raises(DomainError):
            Grid(nodes=x, weights=np.ones_like(x), grading="g")

    def test_rejects_negative_weights(self):
        x = np.linspace(1.0, 2.0, 80)
        w = np.ones_like(x)
        w[3] = -1e-12
        with pytest.raises(DomainError):
            Grid(nodes=x, weights=w, grading="g")

    def test_accessors(self):
        x = np.linspace(0.5, 4.0, 128)
        g = Grid(nodes=x, weights=trapezoid_weights(x), grading="uniform")
        assert g.n == 128
        assert g.x_max == 4.0
        # integral of x over the trailing cells is exact for the trapezoid
        # rule; the leading cell pins the integrand to 0 at x = 0
        assert g.integrate(x) == pytest.approx(4.0**2 / 2.0, rel=1e-14)


class TestTrapezoidWeights:
    def test_linear_through_origin_exact(self):
        x = np.geomspace(1e-4, 8.0, 200)
        w = trapezoid_weights(x)
        assert float(w @ (3.0 * x)) == pytest.approx(3.0 * 8.0**2 / 2.0, rel=1e-13)

    def test_matches_interior_trapezoid(self):
        x = np.geomspace(0.1, 5.0, 90)
        w = trapezoid_weights(x)
        interior = float(np.trapezoid(np.sin(x), x))
        ours = float(w @ np.sin(x))
        lead = x[0] / 2.0 * np.sin(x[0])
        assert ours == pytest.approx(interior + lead, rel=1e-13)

    def test_second_order_convergence(self):
        errs = []
        for n in (200, 400, 800):
            x = np.linspace(1e-8, math.pi, n)
            w = trapezoid_weights(x)
            errs.append(abs(float(w @ np.sin(x)) - 2.0))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5


class TestBuildNodes:
    def test_endpoints_exact(self):
        g = build_nodes(256, 20.0, 1.0)
        assert g.nodes[0] == 1e-6
        assert g.nodes[-1] == 20.0

    def test_uniform_in_grading_map(self):
        g = build_nodes(512, 30.0, 2.0)
        u = grading_map(g.nodes, 30.0, 2.0)
        du = np.diff(u)
        assert np.max(np.abs(du - du[0])) < 1e-10 * abs(du[0])

    def test_geometric_near_origin(self):
        g = build_nodes(1024, 25.0, 1.0)
        head = g.nodes[:40]
        ratios = head[1:] / head[:-1]
        assert np.max(np.abs(ratios - ratios[0])) < 1e-6

    def test_tail_uniform_in_power(self):
        g = build_nodes(1024, 25.0, 2.0)
        tail = g.nodes[-40:] ** 2.0
        steps = np.diff(tail)
        assert np.max(np.abs(steps / steps[0] - 1.0)) < 2e-2

    def test_smooth_spacing_no_seam(self):
        # the worst relative kink in the spacing sequence must shrink like
        # the square of the step in the grading variable; a spliced grid
        # keeps an O(1) kink at the seam no matter how fine the mesh
        worst = []
        for n in (1024, 2048, 4096):
            g = build_nodes(n, 25.0, 1.0)
            ell = np.diff(g.nodes)
            kink = np.abs(ell[2:] - 2.0 * ell[1:-1] + ell[:-2])
            worst.append(float(np.max(kink / ell[1:-1])))
        assert worst[0] / worst[1] > 3.5
        assert worst[1] / worst[2] > 3.5
        assert worst[-1] < 1e-3

    def test_rejects_small_n(self):
        with pytest.raises(DomainError):
            build_nodes(MIN_NODES - 1, 10.0, 1.0)

    def test_rejects_tiny_domain(self):
        with pytest.raises(DomainError):
            build_nodes(128, 8e-6, 1.0)

    def test_rejects_alpha_below_one(self):
        with pytest.raises(DomainError):
            build_nodes(128, 10.0, 0.5)

    def test_rejects_origin_at_blend_scale(self):
        with pytest.raises(DomainError):
            build_nodes(128, 10.0, 1.0, eps0=0.5)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(min_value=MIN_NODES, max_value=700),
        x_max=st.floats(min_value=0.5, max_value=80.0),
        alpha=st.floats(min_value=1.0, max_value=3.0),
    )
    def test_always_valid_grid(self, n, x_max, alpha):
        g = build_nodes(n, x_max, alpha)
        assert g.n == n
        assert g.nodes[0] == 1e-6
        assert g.nodes[-1] == pytest.approx(x_max, rel=1e-15)
        assert np.all(np.diff(g.nodes) > 0.0)
        u = grading_map(g.nodes, x_max, alpha)
        du = np.diff(u)
        assert np.max(np.abs(du - du[0])) < 1e-8 * abs(du[0])


class TestDerivatives:
    def test_first_exact_on_quadratic(self):
        x = np.geomspace(0.1, 3.0, 70)
        d = first_derivative(x, 2.0 * x**2 - x + 0.5)
        assert np.allclose(d, 4.0 * x - 1.0, rtol=1e-11, atol=1e-11)

    def test_second_exact_on_quadratic_interior(self):
        x = np.geomspace(0.1, 3.0, 70)
        d = second_derivative(x, 2.0 * x**2 - x + 0.5)
        assert np.allclose(d[1:-1], 4.0, rtol=1e-9)

    def test_first_second_order(self):
        errs = []
        for n in (100, 200, 400):
            x = np.linspace(0.1, 3.0, n)
            d = first_derivative(x, np.sin(x))
            errs.append(float(np.max(np.abs(d - np.cos(x)))))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5

    def test_second_converges_interior(self):
        errs = []
        for n in (100, 200, 400):
            x = np.linspace(0.1, 3.0, n)
            d = second_derivative(x, np.sin(x))
            errs.append(float(np.max(np.abs(d[1:-1] + np.sin(x[1:-1])))))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5

    def test_rejects_short_input(self):
        with pytest.raises(DomainError):
            first_derivative(np.array([1.0, 2.0]), np.array([0.0, 1.0]))


class TestStretchedTailCut:
    def test_solves_decay_equation(self):
        for amplitude in (1.0, 4.0):
            for alpha in (1.0, 1.5, 2.0):
                x = stretched_tail_cut(amplitude, alpha, 1e-12)
                decayed = math.exp(-math.sqrt(amplitude) * x**alpha / alpha)
                assert decayed == pytest.approx(1e-12, rel=1e-12)

    def test_known_cuts(self):
        # gamma = 0 gives a pure exponential envelope, gamma = 2 a Gaussian
        assert stretched_tail_cut(1.0, 1.0, 1e-12) == pytest.approx(27.631021115928547, rel=1e-14)
        assert stretched_tail_cut(1.0, 2.0, 1e-12) == pytest.approx(7.4338443776996765, rel=1e-12)

    def test_amplitude_shrinks_cut(self):
        assert stretched_tail_cut(4.0, 1.0, 1e-12) == pytest.approx(
            stretched_tail_cut(1.0, 1.0, 1e-12) / 2.0, rel=1e-14
        )

    def test_rejects_bad_tolerance(self):
        with pytest.raises(DomainError):
            stretched_tail_cut(1.0, 1.0, 1.5)
