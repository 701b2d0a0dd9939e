"""Regime atlas across the shipped coefficient specs.

Solves every spec file in specs/, fits the small-size and large-size
laws on the numeric output, and tabulates fitted quantities next to the
coefficient-side predictions.  Writes one CSV row per spec and prints a
short verdict line each, so drift between solver and analysis layers is
visible at a glance.

Usage:
    python scripts/regime_atlas.py --n 2048 --out atlas.csv
"""

import argparse
import csv
import math
from pathlib import Path

from fragstat import (
    SolverConfig,
    load_spec,
    small_classify,
    small_report,
    solve_nullspace,
    tail_report,
)

FIELDS = (
    "spec", "gamma", "regime_predicted", "regime_fitted", "exponent_fitted",
    "stretch_fitted", "stretch_predicted", "rate_fitted", "rate_predicted",
    "lower_envelope_ok", "upper_envelope_ok",
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--specs", type=Path, default=Path(__file__).resolve().parent.parent / "specs")
    ap.add_argument("--out", type=Path, default=Path("atlas.csv"))
    args = ap.parse_args()

    rows = []
    for path in sorted(args.specs.glob("*.cfg")):
        spec = load_spec(path)
        dist = solve_nullspace(spec, SolverConfig(n=args.n))
        prediction = small_classify(spec)
        small = small_report(spec, dist)
        fit = tail_report(spec, dist)
        gamma = spec.rate.exponent
        row = {
            "spec": path.stem,
            "gamma": gamma,
            "regime_predicted": prediction.regime,
            "regime_fitted": small.regime,
            "exponent_fitted": small.exponent,
            "stretch_fitted": fit.stretch_exponent,
            "stretch_predicted": 0.5 * (gamma + 2.0),
            "rate_fitted": fit.decay_rate,
            "rate_predicted": math.sqrt(spec.rate.amplitude),
            "lower_envelope_ok": fit.lower_bound_ok,
            "upper_envelope_ok": fit.upper_bound_ok,
        }
        rows.append(row)
        agree = "ok" if small.regime == prediction.regime else "MISMATCH"
        print(f"{path.stem:>18}: small {small.regime:<10} ({agree}), "
              f"tail alpha {fit.stretch_exponent:.3f} vs {row['stretch_predicted']:.3f}, "
              f"rate {fit.decay_rate:.3f} vs {row['rate_predicted']:.3f}, "
              f"envelopes {fit.lower_bound_ok}/{fit.upper_bound_ok}")

    with args.out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
