"""Stationary profiles of fragmentation with size diffusion, numerically.

Two independent routes to the normalized steady profile on a truncated
graded grid:

* ``solve_nullspace`` discretizes -f'' + a f - (gain) as a dense
  collocation matrix and extracts its one-dimensional null space by
  shifted inverse iteration;
* ``solve_conservative`` iterates the first-order balance in which the
  derivative of f(z)/z equals -1/z^2 times the partial first moment of
  the fragmentation flux, integrating inward from the far boundary.

Both renormalize the quadrature first moment to one and report residuals
of the second-order form (weighted L1) and of the first-order form
(relative sup over interior nodes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from . import closed_form
from .errors import (
    AssemblyError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    NumericalError,
    PreconditionError,
)
from .grids import MIN_NODES, Grid, build_nodes, first_derivative, stretched_tail_cut
from .kernels import CoefficientSpec, b_eval, check_assumptions, rate_eval

__all__ = [
    "NORM_TOL",
    "RATIO_SLACK",
    "SizeDistribution",
    "SolverConfig",
    "assemble_operator",
    "build_grid",
    "residual",
    "solve",
    "solve_conservative",
    "solve_nullspace",
]

# normalization slack for solver outputs, |m1 - 1| <= NORM_TOL
NORM_TOL = 1e-8
# per-node slack allowed on the non-increasing values/x sequence
RATIO_SLACK = 1e-10
# diagonal shift keeping the LU factorization of the near-singular
# equilibrated operator well posed
_SHIFT = 1e-13
# negative undershoot tolerated in the null vector, relative to its peak
_NEG_SLACK = 1e-10
# nodes where f + z|f'| has decayed below this fraction of its peak are
# skipped by the relative first-order residual; past that point the
# far-boundary truncation flux dominates even exact samples of the
# untruncated profile (the flux constant sits near tail_tol * peak, so
# the floor must stay a few orders above tail_tol)
_SUP_FLOOR = 1e-4

_GL_NODES, _GL_WEIGHTS = leggauss(4)


@dataclass(frozen=True)
class SolverConfig:
    """Discretization size and iteration budget for the stationary solvers."""

    n: int = 2048
    x_max: float | None = None
    tail_tol: float = 1e-12
    eig_tol: float = 1e-10
    max_iter: int = 200
    formulation: str = "second_order"

    def __post_init__(self) -> None:
        if self.n < MIN_NODES:
            raise DomainError(f"need n >= {MIN_NODES}, got {self.n}")
        if self.x_max is not None and not (math.isfinite(self.x_max) and self.x_max > 0.0):
            raise DomainError(f"x_max must be positive, got {self.x_max}")
        for name in ("tail_tol", "eig_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise DomainError(f"{name} must be in (0, 1), got {v}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.formulation not in ("second_order", "conservative"):
            raise DomainError(f"unknown formulation {self.formulation!r}")


@dataclass(frozen=True, eq=False)
class SizeDistribution:
    """Profile samples on a grid with their measured first moment.

    The constructor only enforces well-formedness (finite, nonnegative,
    matching the grid) so that externally built samples can be pushed
    through ``residual``.  Solver outputs additionally satisfy
    |m1 - 1| <= NORM_TOL and a non-increasing values/x sequence up to
    RATIO_SLACK per node.
    """

    grid: Grid
    values: np.ndarray
    m1: float
    method: str
    residual_balance: float
    residual_flux: float

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n,):
            raise DomainError("values must have one entry per grid node")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise DomainError("values must be finite and nonnegative")


def build_grid(spec: CoefficientSpec, config: SolverConfig) -> Grid:
    """Truncated graded grid sized to the far-field decay of the profile.

    The automatic cut solves exp(-sqrt(amp) * x**alpha / alpha) = tail_tol
    with the slowest admissible decay (the lower rate envelope), so the
    discarded tail sits below tail_tol for every rate above the envelope.
    An explicit ``x_max`` must not fall short of that cut.
    """
    report = check_assumptions(spec)
    required = ("mass_conserving", "mass_split_positive")
    bad = [name for name in required if not report.entry(name).passed]
    if bad:
        raise PreconditionError("coefficients fail admissibility checks: " + ", ".join(bad))
    a_lo = spec.rate.envelope()[0]
    alpha = 0.5 * (spec.rate.exponent + 2.0)
    cut = stretched_tail_cut(a_lo, alpha, config.tail_tol)
    if config.x_max is None:
        x_max = cut
    elif config.x_max >= cut:
        x_max = config.x_max
    else:
        raise PreconditionError(
            f"x_max {config.x_max:.6g} keeps tail mass above tail_tol; need >= {cut:.6g}"
        )
    return build_nodes(config.n, x_max, alpha)


def _row_trapezoid(nodes: np.ndarray) -> np.ndarray:
    """W[i, j]: trapezoid weight of node j in the integral over [x_i, x_max]."""
    n = nodes.size
    half = np.zeros(n)
    half[:-1] = 0.5 * np.diff(nodes)
    right = np.tile(half, (n, 1))
    left = np.zeros((n, n))
    left[:, 1:] = half[:-1]
    return np.triu(right) + np.triu(left, k=1)


def _monomial_cell(xl: np.ndarray, xr: np.ndarray, p: float) -> np.ndarray:
    """Elementwise integral of y**p over the cells [xl, xr]."""
    if abs(p + 1.0) < 1e-12:
        return np.log(xr / xl)
    return (np.power(xr, p + 1.0) - np.power(xl, p + 1.0)) / (p + 1.0)


def _diagonal_correction(spec, nodes, a, B, G) -> None:
    """Replace the diagonal-cell trapezoid of the gain with a cell rule.

    For power-law coefficients the integrand a(y) b(x, y) against the two
    linear hats is a monomial whose cell integral is taken exactly;
    otherwise a 4-point Gauss rule on the cell is used.  This removes the
    quadrature bias of a plain trapezoid row where the kernel varies most,
    at the support edge y near x.
    """
    n = nodes.size
    xl, xr = nodes[:-1], nodes[1:]
    ell = xr - xl
    d = spec.daughter
    r = spec.rate
    if d.variant == "power_law" and r.is_power_law:
        q = r.exponent - d.nu - 1.0
        j0 = _monomial_cell(xl, xr, q)
        j1 = _monomial_cell(xl, xr, q + 1.0)
        c = r.amplitude * (d.nu + 2.0) * np.power(xl, d.nu)
        gl_left = c * (xr * j0 - j1) / ell
        gl_right = c * (j1 - xl * j0) / ell
    else:
        y = xl[:, None] + ell[:, None] * (0.5 * (_GL_NODES + 1.0))[None, :]
        try:
            bq = np.asarray(b_eval(spec, xl[:, None], y), dtype=float)
        except Exception as exc:
            raise AssemblyError("daughter kernel failed inside a diagonal cell") from exc
        if bq.shape != y.shape or not np.all(np.isfinite(bq)):
            k = int(np.argmin(np.all(np.isfinite(np.atleast_2d(bq)), axis=-1)))
            raise AssemblyError(
                f"daughter kernel not finite in the diagonal cell at x={xl[k]:.6g}"
            )
        core = (0.5 * ell[:, None] * _GL_WEIGHTS[None, :]) * rate_eval(spec, y) * bq
        phi = (y - xl[:, None]) / ell[:, None]
        gl_left = np.sum(core * (1.0 - phi), axis=1)
        gl_right = np.sum(core * phi, axis=1)
    idx = np.arange(n - 1)
    G[idx, idx] = gl_left
    G[idx, idx + 1] += gl_right - 0.5 * ell * a[1:] * B[idx, idx + 1]


def _gain_matrix(spec: CoefficientSpec, nodes: np.ndarray) -> np.ndarray:
    """G[i, j] f_j approximates the gain integral over [x_i, x_max]."""
    n = nodes.size
    a = rate_eval(spec, nodes)
    B = np.zeros((n, n))
    for i in range(n):
        y = nodes[i:]
        try:
            row = np.asarray(b_eval(spec, nodes[i], y), dtype=float)
        except Exception as exc:
            raise AssemblyError(f"daughter kernel failed on the row x={nodes[i]:.6g}") from exc
        if row.shape != y.shape:
            raise AssemblyError(f"daughter kernel returned a bad shape at x={nodes[i]:.6g}")
        if not np.all(np.isfinite(row)):
            j = i + int(np.argmin(np.isfinite(row)))
            raise AssemblyError(
                f"daughter kernel not finite at (x={nodes[i]:.6g}, y={nodes[j]:.6g})"
            )
        B[i, i:] = row
    G = _row_trapezoid(nodes) * a[None, :] * B
    _diagonal_correction(spec, nodes, a, B, G)
    return G


def assemble_operator(spec: CoefficientSpec, grid: Grid) -> np.ndarray:
    """Dense matrix of f -> -f'' + a f - (gain) with boundary rows.

    Rows 1..n-2 collocate the balance on the nonuniform 3-point stencil
    and the last row pins f(x_max) = 0.  The first row imposes the
    integrated form of the balance at the first node,

        f(x_0) - x_0 f'(x_0) - (flux through x_0) = 0,

    with a one-sided second-order derivative.  Solutions of the balance
    satisfy this identity exactly, for every daughter family, so it
    doubles as the small-size boundary condition without assuming any
    local shape for f.  A ghost-value stencil through f(0) = 0 is not
    used: daughter kernels whose mass piles up logarithmically toward
    zero size produce profiles with f(x_0) far above the linear
    extrapolation, and the ghost row then drags the whole null vector
    off the solution.
    """
    nodes = grid.nodes
    n = grid.n
    a = rate_eval(spec, nodes)
    if not np.all(np.isfinite(a)):
        k = int(np.argmin(np.isfinite(a)))
        raise AssemblyError(f"rate not finite at x={nodes[k]:.6g}")
    hp = np.diff(nodes)
    hm = np.empty(n - 1)
    hm[0] = nodes[0]
    hm[1:] = hp[:-1]
    hs = hm + hp
    L = -_gain_matrix(spec, nodes)
    i = np.arange(n - 1)
    L[i, i] += 2.0 / (hm * hp) + a[:-1]
    L[i, i + 1] -= 2.0 / (hp * hs)
    L[i[1:], i[1:] - 1] -= 2.0 / (hm[1:] * hs[1:])
    h1, h2 = hp[0], hp[1]
    L[0, :] = -_flux_matrix(spec, nodes)[0, :]
    L[0, 0] += 1.0 + nodes[0] * (2.0 * h1 + h2) / (h1 * (h1 + h2))
    L[0, 1] -= nodes[0] * (h1 + h2) / (h1 * h2)
    L[0, 2] += nodes[0] * h1 / (h2 * (h1 + h2))
    L[n - 1, :] = 0.0
    L[n - 1, n - 1] = 1.0
    return L


def _partial_mass_matrix(spec: CoefficientSpec, nodes: np.ndarray) -> np.ndarray:
    """pm[i, j] = integral of x b(x, x_j) over [0, x_i], zero below the diagonal.

    Named families evaluate their cumulative profile in closed form.  A
    tabulated-profile daughter is integrated once on a fine geometric
    abscissa and interpolated; a bare two-variable kernel is accumulated
    column by column with the trapezoid rule, so the few columns with
    hardly any nodes beneath them are quadrature-limited.
    """
    n = nodes.size
    d = spec.daughter
    X = nodes[:, None]
    Y = nodes[None, :]
    if d.variant in ("power_law", "log_power"):
        S = np.minimum(X / Y, 1.0)
        if d.variant == "power_law":
            H = np.power(S, d.nu + 2.0)
        else:
            H = np.power(1.0 - np.log(S), -d.theta)
        return np.triu(Y * H)
    if d.variant == "self_similar":
        s_tab = np.geomspace(nodes[0] / nodes[-1], 1.0, 4097)
        try:
            hv = np.asarray(d.h(s_tab), dtype=float)
            if hv.shape != s_tab.shape:
                raise TypeError
        except TypeError:
            hv = np.array([float(d.h(float(s))) for s in s_tab])
        g = s_tab * hv
        steps = np.empty(s_tab.size)
        steps[0] = 0.5 * s_tab[0] * g[0]  # leading cell, integrand pinned 0 at u=0
        steps[1:] = 0.5 * np.diff(s_tab) * (g[1:] + g[:-1])
        h_tab = np.cumsum(steps)
        S = np.minimum(X / Y, 1.0)
        H = np.interp(np.log(S), np.log(s_tab), h_tab)
        return np.triu(Y * H)
    if d.partial_mass_primitive is not None:
        pm = np.asarray(d.partial_mass_primitive(np.minimum(X, Y), Y), dtype=float)
        return np.where(X <= Y, pm, 0.0)
    pm = np.zeros((n, n))
    for j in range(n):
        xs = nodes[: j + 1]
        g = xs * np.asarray(d.b(xs, nodes[j]), dtype=float)
        steps = np.empty(j + 1)
        steps[0] = 0.5 * xs[0] * g[0]
        steps[1:] = 0.5 * np.diff(xs) * (g[1:] + g[:-1])
        pm[: j + 1, j] = np.cumsum(steps)
    return pm


def _flux_matrix(spec: CoefficientSpec, nodes: np.ndarray) -> np.ndarray:
    """K with (K f)_i approximating the partial-moment flux at x_i."""
    a = rate_eval(spec, nodes)
    return _row_trapezoid(nodes) * a[None, :] * _partial_mass_matrix(spec, nodes)


def _index_derivatives(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order d/di and d2/di2 of samples on the uniform index grid."""
    f = np.asarray(vals, dtype=float)
    d1 = np.empty_like(f)
    d2 = np.empty_like(f)
    d1[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / 12.0
    d2[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / 12.0
    e1a = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    e1b = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    e2a = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0
    e2b = np.array([11.0, -20.0, 6.0, 4.0, -1.0]) / 12.0
    head, tail = f[:5], f[-5:][::-1]
    d1[0], d1[1] = e1a @ head, e1b @ head
    d1[-1], d1[-2] = -(e1a @ tail), -(e1b @ tail)
    d2[0], d2[1] = e2a @ head, e2b @ head
    d2[-1], d2[-2] = e2a @ tail, e2b @ tail
    return d1, d2


def _gregory_matrix(n: int) -> np.ndarray:
    """Row i: end-corrected trapezoid weights over indices i..n-1 (unit step).

    Rows long enough for both three-point end corrections integrate smooth
    integrands at fourth order; shorter rows fall back to the trapezoid.
    """
    W = np.triu(np.ones((n, n)))
    idx = np.arange(n)
    W[idx, idx] = 0.5
    W[:-1, -1] = 0.5
    W[-1, -1] = 0.0
    if n >= 6:
        r = np.arange(n - 5)
        W[r, r] = 3.0 / 8.0
        W[r, r + 1] = 7.0 / 6.0
        W[r, r + 2] = 23.0 / 24.0
        W[: n - 5, n - 3] = 23.0 / 24.0
        W[: n - 5, n - 2] = 7.0 / 6.0
        W[: n - 5, n - 1] = 3.0 / 8.0
    return W


def _high_order_residual(spec: CoefficientSpec, grid: Grid, values: np.ndarray) -> np.ndarray:
    """Residual of the balance evaluated with fourth-order pieces.

    Derivatives are taken along the node index, where the smooth grading
    map makes every admissible profile smooth (log-flat small-size
    behavior included), and converted through the map's own index
    derivatives; integrals use end-corrected trapezoid weights.  Feeds
    the defect-correction polish of the null vector.
    """
    nodes = grid.nodes
    n = nodes.size
    f = np.asarray(values, dtype=float)
    a = rate_eval(spec, nodes)
    xp, xpp = _index_derivatives(nodes)
    fp, fpp = _index_derivatives(f)
    f_x = fp / xp
    f_xx = (fpp - f_x * xpp) / (xp * xp)
    W = _gregory_matrix(n)
    core = a * f * xp
    gain = np.empty(n)
    for i in range(n):
        row = np.asarray(b_eval(spec, nodes[i], nodes[i:]), dtype=float)
        gain[i] = W[i, i:] @ (row * core[i:])
    r = -f_xx + a * f - gain
    pm0 = _partial_mass_matrix(spec, nodes)[0, :]
    r[0] = f[0] - nodes[0] * f_x[0] - W[0, :] @ (a * pm0 * f * xp)
    r[-1] = f[-1]
    return r


def _residual_pair(spec, grid, values, L=None, K=None) -> tuple[float, float]:
    nodes, weights = grid.nodes, grid.weights
    scale = float(np.sum(weights * nodes * np.abs(values)))
    if scale == 0.0:
        return 0.0, 0.0
    if L is None:
        L = assemble_operator(spec, grid)
    r = L @ values
    r1 = float(np.sum((weights * nodes * np.abs(r))[:-1]) / scale)
    if K is None:
        K = _flux_matrix(spec, nodes)
    fp = first_derivative(nodes, values)
    num = np.abs(values - nodes * fp - K @ values)
    den = np.abs(values) + nodes * np.abs(fp)
    keep = den[1:-1] >= _SUP_FLOOR * float(np.max(den))
    if not np.any(keep):
        return r1, 0.0
    r2 = float(np.max(num[1:-1][keep] / den[1:-1][keep]))
    return r1, r2


def residual(spec: CoefficientSpec, f: SizeDistribution) -> tuple[float, float]:
    """(balance, flux) residual pair for the samples in ``f``.

    The balance residual is the x-weighted L1 norm of -f'' + a f - (gain)
    over the collocation rows, relative to the x-weighted L1 norm of f, so
    it is invariant under rescaling of the samples.  The flux residual is
    the sup over interior nodes of |f - z f' - (tail flux)| against
    f + z|f'|, skipping nodes where that scale has decayed below
    _SUP_FLOOR of its peak.
    """
    return _residual_pair(spec, f.grid, f.values)


def _initial_shape(spec: CoefficientSpec, nodes: np.ndarray) -> np.ndarray:
    a_lo = spec.rate.envelope()[0]
    alpha = 0.5 * (spec.rate.exponent + 2.0)
    w = (math.sqrt(a_lo) / alpha) * np.power(nodes, alpha)
    return nodes * np.exp(-np.minimum(w, 700.0))


def _closed_form_restart(spec: CoefficientSpec, nodes: np.ndarray) -> np.ndarray:
    d = spec.daughter
    nu = d.nu if d.variant == "power_law" else 0.0
    sol = closed_form.normalize(spec.rate.envelope()[0], spec.rate.exponent, nu)
    return closed_form.closed_form_eval(sol, nodes)


def _finish(spec, grid, values, method, L=None, K=None) -> SizeDistribution:
    """Clamp roundoff, renormalize, measure residuals, package."""
    peak = float(np.max(values))
    vmin = float(np.min(values))
    if peak <= 0.0 or vmin < -_NEG_SLACK * peak:
        raise NumericalError(
            f"solution is not nonnegative (min {vmin:.3e} against peak {peak:.3e})"
        )
    values = np.maximum(values, 0.0)
    m1 = grid.integrate(grid.nodes * values)
    if not (math.isfinite(m1) and m1 > 0.0):
        raise NumericalError(f"first moment of the solution is {m1!r}")
    values = values / m1
    m1 = grid.integrate(grid.nodes * values)
    if abs(m1 - 1.0) > NORM_TOL:
        raise NumericalError(f"renormalization failed, first moment {m1!r}")
    r1, r2 = _residual_pair(spec, grid, values, L=L, K=K)
    return SizeDistribution(
        grid=grid, values=values, m1=m1, method=method, residual_balance=r1, residual_flux=r2
    )


def solve_nullspace(spec: CoefficientSpec, config: SolverConfig | None = None) -> SizeDistribution:
    """Stationary profile as the null vector of the collocation matrix.

    The rows are equilibrated to unit max, the matrix is factored once
    with a tiny diagonal shift, and inverse iteration is run until the
    normalized iterate moves by at most eig_tol in sup norm.   On
    stagnation the iteration restarts once from the closed-form shape
    with the nearest power-law exponents.  A deflated second iteration
    then probes the spectral gap: a second direction with residual below
    eig_tol is reported as a degeneracy instead of being averaged over.
    The converged vector is polished by one defect-correction step
    against a fourth-order evaluation of the balance, which pushes the
    monotonicity of f/x down to the RATIO_SLACK level even where the
    exact ratio is nearly flat.
    """
    config = config or SolverConfig()
    grid = build_grid(spec, config)
    n = grid.n
    L = assemble_operator(spec, grid)
    rmax = np.max(np.abs(L), axis=1)
    if np.any(rmax == 0.0):
        raise AssemblyError("operator has an identically zero row")
    Ls = L / rmax[:, None]
    lu = lu_factor(Ls + _SHIFT * np.eye(n), check_finite=False)

    v = _initial_shape(spec, grid.nodes)
    v = v / v[np.argmax(np.abs(v))]
    best = math.inf
    delta = math.inf
    restarted = False
    converged = False
    for it in range(config.max_iter):
        w = lu_solve(lu, v, check_finite=False)
        w = w / w[np.argmax(np.abs(w))]
        delta = float(np.max(np.abs(w - v)))
        v = w
        if delta <= config.eig_tol:
            converged = True
            break
        if delta < best:
            best = delta
        elif it >= 4 and not restarted:
            v = _closed_form_restart(spec, grid.nodes)
            v = v / v[np.argmax(np.abs(v))]
            restarted = True
            best = math.inf
    if not converged:
        raise ConvergenceError(
            f"inverse iteration stalled at step change {delta:.3e} after "
            f"{config.max_iter} iterations (eig_tol {config.eig_tol:.1e})"
        )

    vhat = v / np.linalg.norm(v)
    u = np.sin(1.0 + np.arange(n))
    u -= (u @ vhat) * vhat
    for _ in range(8):
        u = lu_solve(lu, u, check_finite=False)
        u -= (u @ vhat) * vhat
        norm = np.linalg.norm(u)
        if norm == 0.0:
            break
        u /= norm
    if np.linalg.norm(u) > 0.0:
        sigma2 = float(np.linalg.norm(Ls @ u))
        if sigma2 < config.eig_tol:
            raise DegeneracyError(
                f"second null direction with residual {sigma2:.3e} below eig_tol"
            )

    if float(np.mean(v)) < 0.0:
        v = -v

    # One defect-correction pass: the fourth-order residual of the iterate
    # drives a correction through the second-order factorization, deflated
    # against the null pair so the near-singular direction stays bounded.
    # This removes the smooth error tilt that otherwise puts wiggles above
    # RATIO_SLACK into f/x where the exact ratio is nearly flat.
    r4 = _high_order_residual(spec, grid, v)
    vhat = v / float(np.linalg.norm(v))
    uleft = vhat.copy()
    for _ in range(3):
        uleft = lu_solve(lu, uleft, trans=1, check_finite=False)
        norm = float(np.linalg.norm(uleft))
        if norm == 0.0:
            break
        uleft /= norm
    lu2 = lu_factor(Ls + np.outer(uleft, vhat), check_finite=False)
    delta = lu_solve(lu2, -(r4 / rmax), check_finite=False)
    if not np.all(np.isfinite(delta)):
        raise NumericalError("defect correction produced a non-finite update")
    v = v + delta
    # the correction only carries information where the profile is
    # resolved; over the far tail (truth below truncation resolution) it
    # can overshoot the tiny samples, so project back onto the positive
    # cone and let the ratio validation in _finish catch bulk-scale damage
    if float(v.min()) < -1e-6 * float(v.max()):
        raise NumericalError(
            f"defect correction drove the solution negative at bulk scale (min {v.min():.3e})"
        )
    np.clip(v, 0.0, None, out=v)
    return _finish(spec, grid, v, "second_order", L=L)


def _sweep_system(spec, grid, K=None) -> np.ndarray:
    """Upper-triangular matrix of one self-consistent inward integration.

    Integrating d/dz (f/z) = -(flux)/z**2 from f(x_max)/x_max = 0 with the
    flux built from the values being computed gives, per node, a scalar
    equation that back-substitution resolves marching inward: the returned
    matrix M satisfies M f = 0 for that march.  Cell integrals of
    (linear interpolant)/y**2 are taken exactly, which keeps the geometric
    cells near the origin honest where 1/y**2 spans many orders.

    A plain lagged-flux sweep is not used: past the truncation point the
    integral operator keeps no eigenvalue near one, so that iteration has
    nothing to converge to (see solve_conservative).
    """
    nodes = grid.nodes
    n = nodes.size
    if K is None:
        K = _flux_matrix(spec, nodes)
    xl, xr = nodes[:-1], nodes[1:]
    ell = xr - xl
    inv_jump = 1.0 / xl - 1.0 / xr
    log_jump = np.log1p(ell / xl)
    beta = (1.0 + xl / ell) * inv_jump - log_jump / ell
    eta = log_jump / ell - (xl / ell) * inv_jump
    bpad = np.zeros(n)
    bpad[:-1] = beta
    epad = np.zeros(n)
    epad[1:] = eta
    smat = np.triu(np.tile(bpad, (n, 1))) + np.triu(np.tile(epad, (n, 1)), k=1)
    return np.eye(n) - nodes[:, None] * (smat @ K)


def _conservative_sweep(spec, grid, values, system=None) -> np.ndarray:
    """One renormalized sweep of the first-order balance.

    The sweep runs the adjoint of the march outward and then the march
    itself inward (the normal form of the inward integration).  The march
    matrix is far from normal, so this pairing is what makes successive
    sweeps contract onto the direction the march nearly annihilates
    instead of crawling along its clustered diagonal.
    """
    M = _sweep_system(spec, grid) if system is None else system
    w = solve_triangular(M, values, trans="T", lower=False, check_finite=False)
    w = solve_triangular(M, w, lower=False, check_finite=False)
    m1 = grid.integrate(grid.nodes * w)
    if not (math.isfinite(m1) and m1 != 0.0):
        raise ConvergenceError(f"sweep produced first moment {m1!r}")
    return w / m1


def solve_conservative(
    spec: CoefficientSpec, config: SolverConfig | None = None
) -> SizeDistribution:
    """Stationary profile as the fixed point of the conservative sweep.

    Each sweep integrates f/z inward from f(x_max)/x_max = 0 with the flux
    resolved self-consistently along the march (an upper-triangular solve),
    then renormalizes the first moment; sweeping repeats until the
    normalized iterate moves by at most eig_tol in sup norm.  Because the
    truncated march concentrates the whole null defect in one direction,
    the fixed point is reached in a couple of sweeps.
    """
    config = config or SolverConfig()
    grid = build_grid(spec, config)
    K = _flux_matrix(spec, grid.nodes)
    M = _sweep_system(spec, grid, K=K)
    f = _initial_shape(spec, grid.nodes)
    f = f / grid.integrate(grid.nodes * f)
    trace: list[float] = []
    converged = False
    for _ in range(config.max_iter):
        fn = _conservative_sweep(spec, grid, f, system=M)
        delta = float(np.max(np.abs(fn - f)))
        trace.append(delta)
        f = fn
        if delta <= config.eig_tol:
            converged = True
            break
    if not converged:
        tail = ", ".join(f"{d:.2e}" for d in trace[-5:])
        raise ConvergenceError(
            f"fixed point missed eig_tol {config.eig_tol:.1e} in {config.max_iter} "
            f"sweeps; last sup-steps [{tail}]"
        )
    return _finish(spec, grid, f, "conservative", K=K)


def solve(spec: CoefficientSpec, config: SolverConfig | None = None) -> SizeDistribution:
    """Dispatch on ``config.formulation``."""
    config = config or SolverConfig()
    if config.formulation == "conservative":
        return solve_conservative(spec, config)
    return solve_nullspace(spec, config)
