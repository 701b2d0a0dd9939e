r"""Gamma and modified Bessel functions of the second kind, fractional order.

Self-contained evaluation (math + numpy only) so the closed-form solution
family can be checked against these routines as ground truth.  Three regimes
for ``K_rho(z)``, stitched at configurable cutoffs:

* small ``z``: order-symmetric series
      K_rho = (pi/2) (I_{-rho} - I_rho) / sin(rho pi),
  evaluated at a reduced order ``|mu| <= 1/2`` followed by stable upward
  recurrence ``K_{m+1} = K_{m-1} + (2m/z) K_m``.  Near integer reduced order
  the 0/0 limit is taken by polynomial interpolation in the order (the series
  is analytic in ``rho``), which realises the Taylor-in-order limit without
  digamma machinery.
* intermediate ``z``: the exponentially weighted integral representation
      K_rho(z) = exp(-z) * int_0^inf exp(-z(cosh t - 1)) cosh(rho t) dt
  by panel-doubling Gauss-Legendre quadrature on a truncated interval.
* large ``z``: the divergent asymptotic series in 1/z truncated at its
  smallest term.

Accuracy target: relative error <= 1e-10 on rho in [0, 2], z in [1e-3, 50]
(validated against independent oracles in the test suite).  Orders up to ~30
and arguments up to ~700 work but are not tuned beyond double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "BesselEvalConfig",
    "gamma_fn",
    "bessel_k",
    "bessel_k_weighted_derivative",
]


@dataclass(frozen=True)
class BesselEvalConfig:
    """Regime cutoffs and tolerances for ``bessel_k``."""

    series_cutoff: float = 2.0  # z below this: order-symmetric series
    asymptotic_cutoff: float = 20.0  # z above this: truncated asymptotic series
    quad_rel_tol: float = 1e-13  # panel-doubling stop for the integral regime
    max_terms: int = 200  # series term budget before giving up

    def __post_init__(self) -> None:
        if not (0.0 < self.series_cutoff < self.asymptotic_cutoff):
            raise DomainError(
                "cutoffs must satisfy 0 < series_cutoff < asymptotic_cutoff, "
                f"got {self.series_cutoff} and {self.asymptotic_cutoff}"
            )
        if not (0.0 < self.quad_rel_tol < 1.0):
            raise DomainError(f"quad_rel_tol must lie in (0, 1), got {self.quad_rel_tol}")
        if self.max_terms < 8:
            raise DomainError(f"max_terms must be at least 8, got {self.max_terms}")


_DEFAULT_CONFIG = BesselEvalConfig()

# Reduced orders closer to an integer than this take the interpolation path.
_ORDER_LIMIT_WINDOW = 1e-4
# Interpolation nodes (offsets from the integer) for the limit path.
_ORDER_NODES = (-5e-4, -2.5e-4, 2.5e-4, 5e-4)


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0, relative error at the double-precision level."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_fn requires finite x > 0, got {x}")
    try:
        return math.gamma(x)
    except OverflowError as exc:  # x beyond ~171.6
        raise DomainError(f"gamma_fn overflows at x = {x}") from exc


def _bessel_i_series(mu: float, z: float, max_terms: int) -> float:
    """I_mu(z) by its ascending series; mu > -1 so all gamma args positive."""
    half = 0.5 * z
    term = half**mu / math.gamma(mu + 1.0)
    acc = term
    q = half * half
    for k in range(1, max_terms):
        term *= q / (k * (k + mu))
        acc += term
        if abs(term) <= 1e-18 * abs(acc):
            return acc
    raise ConvergenceError(f"I series stalled at mu={mu}, z={z}")


def _k_pair_series_direct(mu: float, z: float, max_terms: int) -> tuple[float, float]:
    """(K_mu, K_{mu+1}) by the order-symmetric series, |mu| in [window, 1/2]."""
    s = math.pi / (2.0 * math.sin(math.pi * mu))
    k0 = s * (_bessel_i_series(-mu, z, max_terms) - _bessel_i_series(mu, z, max_terms))
    # sin((mu+1) pi) = -sin(mu pi)
    k1 = -s * (_bessel_i_series(-mu - 1.0, z, max_terms) - _bessel_i_series(mu + 1.0, z, max_terms))
    return k0, k1


def _k_pair_series(mu: float, z: float, max_terms: int) -> tuple[float, float]:
    """(K_mu, K_{mu+1}) for |mu| <= 1/2, taking the near-integer limit path."""
    if abs(mu) >= _ORDER_LIMIT_WINDOW:
        return _k_pair_series_direct(mu, z, max_terms)
    # 0/0 at mu = 0: interpolate K as a function of the order through nodes
    # where the direct formula is well conditioned.  K is analytic in the
    # order, so 4-node Lagrange interpolation leaves ~1e-11 worst case here.
    vals0 = []
    vals1 = []
    for d in _ORDER_NODES:
        a, b = _k_pair_series_direct(d, z, max_terms)
        vals0.append(a)
        vals1.append(b)
    k0 = _lagrange4(_ORDER_NODES, vals0, mu)
    k1 = _lagrange4(_ORDER_NODES, vals1, mu)
    return k0, k1


def _lagrange4(xs, ys, x: float) -> float:
    acc = 0.0
    for i in range(4):
        w = ys[i]
        for j in range(4):
            if j != i:
                w *= (x - xs[j]) / (xs[i] - xs[j])
        acc += w
    return acc


@lru_cache(maxsize=8)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _k_integral(rho: float, z: float, rel_tol: float) -> float:
    """exp(z) * K_rho(z) via the cosh integral, panel-doubling Gauss-Legendre."""
    # Truncation point: z(cosh T - 1) - rho T >= 45 makes the tail negligible.
    t_up = 3.0
    for _ in range(3):
        t_up = math.acosh(1.0 + (45.0 + rho * t_up) / z)
    xg, wg = _gl_nodes(48)

    def panel_sum(npanels: int) -> float:
        edges = np.linspace(0.0, t_up, npanels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        t = mid[:, None] + half[:, None] * xg[None, :]
        integrand = np.exp(-z * (np.cosh(t) - 1.0)) * np.cosh(rho * t)
        return float(np.sum(half[:, None] * wg[None, :] * integrand))

    prev = panel_sum(1)
    for npanels in (2, 4, 8, 16):
        cur = panel_sum(npanels)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceError(f"integral representation stalled at rho={rho}, z={z}")


def _k_asymptotic(rho: float, z: float) -> float:
    """K_rho(z) by the large-argument series truncated at its smallest term."""
    if z > 700.0:
        raise DomainError(f"bessel_k underflows for z = {z} > 700")
    four_rho2 = 4.0 * rho * rho
    term = 1.0
    acc = 1.0
    for k in range(1, 200):
        factor = (four_rho2 - (2.0 * k - 1.0) ** 2) / (8.0 * k * z)
        nxt = term * factor
        if abs(nxt) >= abs(term):
            break  # divergence point: stop at the smallest term
        term = nxt
        acc += term
        if abs(term) <= 1e-18 * abs(acc):
            break
    return math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) * acc


def bessel_k(rho: float, z: float, config: BesselEvalConfig | None = None) -> float:
    """Modified Bessel function of the second kind, K_rho(z), z > 0.

    Symmetric in the order (K_{-rho} = K_rho), positive, decreasing in z.
    """
    cfg = config or _DEFAULT_CONFIG
    rho = float(rho)
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"bessel_k requires finite z > 0, got {z}")
    if not math.isfinite(rho):
        raise DomainError(f"bessel_k requires a finite order, got {rho}")
    rho = abs(rho)

    if z >= cfg.asymptotic_cutoff:
        return _k_asymptotic(rho, z)
    if z > cfg.series_cutoff:
        return math.exp(-z) * _k_integral(rho, z, cfg.quad_rel_tol)

    # Series regime: reduce the order to |mu| <= 1/2 and recur upward.
    n = int(round(rho))
    mu = rho - n
    try:
        k_lo, k_hi = _k_pair_series(mu, z, cfg.max_terms)
        if n == 0:
            return k_lo
        for m in range(1, n):
            k_lo, k_hi = k_hi, k_lo + (2.0 * (mu + m) / z) * k_hi
        return k_hi
    except OverflowError as exc:
        raise DomainError(f"bessel_k overflows at rho={rho}, z={z}") from exc


def bessel_k_weighted_derivative(
    rho: float, z: float, config: BesselEvalConfig | None = None
) -> float:
    """d/dz of z^rho K_rho(z), which equals -z^rho K_{rho-1}(z)."""
    rho = float(rho)
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"bessel_k_weighted_derivative requires z > 0, got {z}")
    return -(z**rho) * bessel_k(abs(rho - 1.0), z, config)
