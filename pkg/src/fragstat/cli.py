"""Command-line front end.

Loads coefficient specs from flat key-value files, runs solves and
analyses, and writes CSV/JSON artifacts.  Every JSON artifact embeds the
fully resolved configuration and the library version; the write time is
isolated in the single ``written_at`` key so identical runs produce
byte-identical output everywhere else.  All files are written atomically
(temp file in the target directory, then rename).

Exit codes: 0 on success, 2 on malformed configs and violated
preconditions, 3 on numerical-convergence failures.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .asymptotics import small_report, tail_report
from .closed_form import (
    closed_form_eval,
    large_size_asymptote,
    normalize,
    small_size_asymptote,
)
from .diagnostics import (
    identity_residual,
    inverse_moment_check,
    moment,
    shape_checks,
    small_limit,
)
from .errors import FragstatError, NumericalError, PreconditionError
from .grids import Grid, trapezoid_weights
from .kernels import check_assumptions, delta_m
from .solver import (
    SizeDistribution,
    SolverConfig,
    build_grid,
    residual,
    solve_conservative,
    solve_nullspace,
)
from .specfile import load_spec, spec_fields
from . import __version__

__all__ = ["main"]

log = logging.getLogger("fragstat")

_MOMENT_BATTERY = (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
_IDENTITY_PROBES = ((0.0, 1.0), (0.5, 1.0), (1.0, 0.5))


def _configure_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("FRAGSTAT_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(value):
    """JSON-safe number: finite floats pass through, the rest stringify."""
    if value is None or isinstance(value, (bool, int, str)):
        return value
    value = float(value)
    return value if math.isfinite(value) else repr(value)


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    log.info("wrote %s", path)


def _write_csv(path: Path, header: tuple[str, ...], columns) -> None:
    rows = ["%s" % ",".join(header)]
    data = np.column_stack(columns)
    rows.extend(",".join("%.17g" % cell for cell in row) for row in data)
    _atomic_write(path, "\n".join(rows) + "\n")
    log.info("wrote %s (%d rows)", path, data.shape[0])


def _artifact(args, payload: dict, extra_config: dict | None = None) -> dict:
    spec = load_spec(args.spec, args.set)
    config = {
        "spec": {k: _num(v) for k, v in spec_fields(spec).items()},
        "spec_path": str(args.spec),
        "overrides": list(args.set),
    }
    if extra_config:
        config.update(extra_config)
    return {
        "command": args.command,
        "config": config,
        "version": __version__,
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "result": payload,
    }


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_profile(path: str | Path) -> SizeDistribution:
    """Rebuild a distribution from the first two CSV columns (x, f).

    The header tells the provenance apart: solver CSVs carry an f_over_x
    column and their truncated far boundary, so the tail analyses must
    keep the same boundary skin they apply to in-process solver output.
    """
    with open(path) as handle:
        header = handle.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise PreconditionError(f"profile CSV {path} needs at least (x, f) columns")
    nodes, values = data[:, 0], data[:, 1]
    grid = Grid(nodes=nodes, weights=trapezoid_weights(nodes), grading="loaded")
    method = "second_order" if "f_over_x" in header else "samples"
    return SizeDistribution(
        grid=grid, values=values, m1=float(grid.integrate(nodes * values)),
        method=method, residual_balance=0.0, residual_flux=0.0,
    )


def _moment_dict(est) -> dict:
    return {
        "order": est.order,
        "value": _num(est.value),
        "divergent": est.divergent,
        "band_integrals": [_num(b) for b in est.band_integrals],
    }


def _cmd_closed_form(args) -> int:
    spec = load_spec(args.spec, args.set)
    if spec.daughter.variant != "power_law" or not spec.rate.is_power_law:
        raise PreconditionError(
            "the closed-form family needs a power-law rate and a power_law daughter"
        )
    sol = normalize(spec.rate.amplitude, spec.rate.exponent, spec.daughter.nu)
    grid = build_grid(spec, SolverConfig())
    z = grid.nodes
    f = closed_form_eval(sol, z)
    out = _out_dir(args)
    _write_csv(out / "closed_form.csv", ("z", "f", "small_asym", "large_asym"),
               (z, f, small_size_asymptote(sol, z), large_size_asymptote(sol, z)))
    payload = {
        "normalization": sol.c,
        "stretch_exponent": sol.alpha,
        "bessel_order": sol.order,
        "n": grid.n,
        "x_max": grid.x_max,
        "m1_quadrature": _num(grid.integrate(z * f)),
    }
    _write_json(out / "closed_form.json", _artifact(args, payload))
    return 0


def _cmd_solve(args) -> int:
    spec = load_spec(args.spec, args.set)
    config = SolverConfig(n=args.n, x_max=args.xmax)
    log.info("solving with n=%d formulation=%s", args.n, args.formulation)
    if args.formulation == "conservative":
        dist = solve_conservative(spec, config)
    else:
        dist = solve_nullspace(spec, config)
    out = _out_dir(args)
    x = dist.grid.nodes
    _write_csv(out / "profile.csv", ("x", "f", "f_over_x"),
               (x, dist.values, dist.values / x))
    payload = {
        "m1": dist.m1,
        "method": dist.method,
        "n": dist.grid.n,
        "x_max": dist.grid.x_max,
        "residual_balance": dist.residual_balance,
        "residual_flux": dist.residual_flux,
    }
    extra = {"n": args.n, "x_max": args.xmax, "formulation": args.formulation}
    _write_json(out / "profile.json", _artifact(args, payload, extra))
    return 0


def _cmd_verify(args) -> int:
    spec = load_spec(args.spec, args.set)
    dist = _load_profile(args.profile)
    balance, flux = residual(spec, dist)
    inv_est, inv_rhs, inv_verdict = inverse_moment_check(spec, dist)
    shapes = shape_checks(dist)
    payload = {
        "residual_balance": balance,
        "residual_flux": flux,
        "m1": dist.m1,
        "moments": [_moment_dict(moment(dist, m)) for m in _MOMENT_BATTERY],
        "identity": [
            {
                "theta": rep.theta, "xi": rep.xi, "lhs": rep.lhs, "rhs": rep.rhs,
                "abs_residual": rep.abs_residual, "rel_residual": rep.rel_residual,
            }
            for rep in (identity_residual(spec, dist, theta, xi)
                        for theta, xi in _IDENTITY_PROBES)
        ],
        "inverse_moment": {
            "estimate": _moment_dict(inv_est),
            "coefficient_side": _num(inv_rhs),
            "verdict": inv_verdict,
        },
        "small_limit": _num(small_limit(dist)),
        "shape": {
            "positive": shapes.positive,
            "ratio_monotone": shapes.ratio_monotone,
            "max_violation": _num(shapes.max_violation),
            "violation_index": shapes.violation_index,
        },
    }
    extra = {"profile": str(args.profile)}
    _write_json(_out_dir(args) / "verify.json", _artifact(args, payload, extra))
    return 0


def _fit_values(report, dist) -> np.ndarray:
    """Evaluate the fitted tail model on the fit window for plotting."""
    x, v = dist.grid.nodes, dist.values
    lo, hi = report.window
    mask = (x >= lo * (1.0 - 1e-12)) & (x <= hi * (1.0 + 1e-12)) & (v > 0.0)
    s, rate, p = report.stretch_exponent, report.decay_rate, report.algebraic_exponent
    shape = p * np.log(x[mask]) - (rate / s) * np.power(x[mask], s)
    level = float(np.mean(np.log(v[mask]) - shape))
    fit = np.full_like(x, np.nan)
    fit[mask] = np.exp(level + shape)
    return mask, fit


def _cmd_tailfit(args) -> int:
    spec = load_spec(args.spec, args.set)
    dist = _load_profile(args.profile)
    window = None
    if args.window is not None:
        try:
            lo, hi = (float(part) for part in args.window.split(","))
        except ValueError:
            raise PreconditionError(
                f"--window needs the form lo,hi with two reals, got {args.window!r}"
            ) from None
        window = (lo, hi)
    report = tail_report(spec, dist, window=window)
    mask, fit = _fit_values(report, dist)
    out = _out_dir(args)
    x = dist.grid.nodes
    _write_csv(out / "tailfit.csv", ("x", "f", "fit"),
               (x[mask], dist.values[mask], fit[mask]))
    payload = {
        "stretch_exponent": report.stretch_exponent,
        "decay_rate": report.decay_rate,
        "algebraic_exponent": report.algebraic_exponent,
        "window": list(report.window),
        "lower_bound_ok": report.lower_bound_ok,
        "upper_bound_ok": report.upper_bound_ok,
        "ratio_bound": _num(report.ratio_bound),
        "headroom": _num(report.headroom),
    }
    extra = {"profile": str(args.profile), "window": args.window}
    _write_json(out / "tailfit.json", _artifact(args, payload, extra))
    return 0


def _cmd_smallfit(args) -> int:
    spec = load_spec(args.spec, args.set)
    dist = _load_profile(args.profile)
    report = small_report(spec, dist)
    payload = {
        "regime": report.regime,
        "exponent": report.exponent,
        "prefactor": report.prefactor,
        "slope": _num(report.slope),
        "scale": _num(report.scale),
        "shift": _num(report.shift),
        "fit_residual": _num(report.fit_residual),
    }
    extra = {"profile": str(args.profile)}
    _write_json(_out_dir(args) / "smallfit.json", _artifact(args, payload, extra))
    return 0


def _cmd_moments(args) -> int:
    load_spec(args.spec, args.set)  # validate the spec even though only f enters
    dist = _load_profile(args.profile)
    payload = {
        "m1": dist.m1,
        "moments": [_moment_dict(moment(dist, m)) for m in _MOMENT_BATTERY],
    }
    extra = {"profile": str(args.profile)}
    _write_json(_out_dir(args) / "moments.json", _artifact(args, payload, extra))
    return 0


def _cmd_delta(args) -> int:
    spec = load_spec(args.spec, args.set)
    value = delta_m(spec, args.m)
    print("%.10f" % value)
    if args.out is not None:
        payload = {"m": args.m, "delta": value}
        _write_json(_out_dir(args) / "delta.json", _artifact(args, payload))
    return 0


def _cmd_assumptions(args) -> int:
    spec = load_spec(args.spec, args.set)
    report = check_assumptions(spec)
    raw = report.to_dict()
    payload = {
        "all_passed": raw["all_passed"],
        "entries": [
            {key: _num(value) for key, value in entry.items()}
            for entry in raw["entries"]
        ],
    }
    _write_json(_out_dir(args) / "assumptions.json", _artifact(args, payload))
    return 0


_COMMANDS = {
    "closed-form": _cmd_closed_form,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "tailfit": _cmd_tailfit,
    "smallfit": _cmd_smallfit,
    "moments": _cmd_moments,
    "delta": _cmd_delta,
    "assumptions": _cmd_assumptions,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragstat",
        description="Stationary fragmentation-with-diffusion profiles: "
                    "solves, diagnostics, and asymptotic fits.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--spec", required=True, help="coefficient spec file")
        p.add_argument("--out", required=out_required, default=None,
                       help="output directory for artifacts")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a spec field")

    common(sub.add_parser("closed-form", help="sample the closed-form family"))

    p = sub.add_parser("solve", help="solve the stationary problem numerically")
    common(p)
    p.add_argument("--n", type=int, default=2048, help="grid node count")
    p.add_argument("--xmax", type=float, default=None, help="far-field truncation")
    p.add_argument("--formulation", choices=("nullspace", "conservative"),
                   default="nullspace", help="discrete formulation")

    for name, needs_profile in (("verify", True), ("tailfit", True),
                                ("smallfit", True), ("moments", True)):
        p = sub.add_parser(name)
        common(p)
        if needs_profile:
            p.add_argument("--profile", required=True,
                           help="profile CSV with (x, f, ...) columns")
        if name == "tailfit":
            p.add_argument("--window", default=None, metavar="LO,HI",
                           help="explicit fit window")

    p = sub.add_parser("delta", help="print the mass-transfer functional")
    common(p, out_required=False)
    p.add_argument("--m", type=float, required=True, help="moment order")

    common(sub.add_parser("assumptions", help="check coefficient admissibility"))
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"fragstat {args.command}: {exc}", file=sys.stderr)
        return 3
    except FragstatError as exc:
        print(f"fragstat {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
