"""Grid-refinement study for the stationary solvers.

Solves one power-law configuration on a doubling ladder of grid sizes,
compares each output against the normalized closed form, and prints a
table of sup-norm errors, defect residuals, and observed convergence
orders.  The closed-form comparison is restricted to the window where
the reference profile is resolvable in relative terms.

Usage:
    python scripts/convergence_study.py --gamma 0 --nu 0 --levels 6
"""

import argparse
import math
import time

import numpy as np

from fragstat import (
    SolverConfig,
    closed_form_eval,
    normalize,
    solve_conservative,
    solve_nullspace,
)
from fragstat.kernels import CoefficientSpec, DaughterSpec, RateSpec


def sup_rel_error(dist, sol) -> float:
    ref = closed_form_eval(sol, dist.grid.nodes)
    mask = (
        (dist.grid.nodes >= 0.05)
        & (dist.grid.nodes <= 10.0)
        & (ref >= 1e-7 * ref.max())
    )
    return float(np.max(np.abs(dist.values[mask] - ref[mask]) / ref[mask]))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--nu", type=float, default=0.0)
    ap.add_argument("--amplitude", type=float, default=1.0)
    ap.add_argument("--levels", type=int, default=6, help="number of doublings from n=256")
    ap.add_argument("--formulation", choices=("nullspace", "conservative"), default="nullspace")
    args = ap.parse_args()

    spec = CoefficientSpec(
        rate=RateSpec(amplitude=args.amplitude, exponent=args.gamma),
        daughter=DaughterSpec(variant="power_law", nu=args.nu),
    )
    sol = normalize(args.amplitude, args.gamma, args.nu)
    solve = solve_conservative if args.formulation == "conservative" else solve_nullspace

    print(f"# gamma={args.gamma} nu={args.nu} amplitude={args.amplitude} "
          f"formulation={args.formulation}")
    print(f"{'n':>6} {'sup_rel':>12} {'order':>7} {'balance':>12} {'flux':>12} {'secs':>6}")
    prev = None
    for level in range(args.levels):
        n = 256 * 2**level
        t0 = time.perf_counter()
        dist = solve(spec, SolverConfig(n=n))
        dt = time.perf_counter() - t0
        err = sup_rel_error(dist, sol)
        order = math.log2(prev / err) if prev else float("nan")
        print(f"{n:>6} {err:>12.4e} {order:>7.2f} "
              f"{dist.residual_balance:>12.4e} {dist.residual_flux:>12.4e} {dt:>6.2f}")
        prev = err


if __name__ == "__main__":
    main()
