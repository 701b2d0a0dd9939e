"""Flat key-value coefficient spec files.

A spec file holds one coefficient pair as dotted ``key = value`` lines:

    # constant rate, uniform binary split
    rate.amplitude   = 1.0
    rate.gamma       = 0.0
    daughter.variant = power_law
    daughter.nu      = 0.0

Blank lines and ``#`` comments are ignored.  Only the two closed-form
families are file-representable; daughter variants built around callables
must be constructed in code.  Every parse problem raises SpecFileError
carrying the file name, line number, and field involved.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

from .errors import DomainError, SpecFileError, UnsupportedOperationError
from .kernels import CoefficientSpec, DaughterSpec, RateSpec

__all__ = [
    "KNOWN_FIELDS",
    "build_spec",
    "load_spec",
    "parse_overrides",
    "parse_spec_text",
    "spec_fields",
]

_VARIANTS = ("power_law", "log_power")

# field -> (required, caster); daughter.variant gates which of nu/theta
# are actually required
KNOWN_FIELDS = {
    "rate.amplitude": (True, float),
    "rate.gamma": (True, float),
    "daughter.variant": (True, str),
    "daughter.nu": (False, float),
    "daughter.theta": (False, float),
    "daughter.chi": (False, float),
    "daughter.m0": (False, float),
    "daughter.lambda": (False, float),
}


def _cast(field: str, raw: str, where: str) -> float | str:
    caster = KNOWN_FIELDS[field][1]
    if caster is str:
        return raw
    try:
        return float(raw)
    except ValueError:
        raise SpecFileError(f"{where}: field {field!r} needs a real number, got {raw!r}") from None


def parse_spec_text(text: str, source: str = "<string>") -> dict[str, float | str]:
    """Parse spec-file text into a validated flat field mapping."""
    fields: dict[str, float | str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        where = f"{source}:{lineno}"
        if "=" not in stripped:
            raise SpecFileError(f"{where}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in KNOWN_FIELDS:
            known = ", ".join(sorted(KNOWN_FIELDS))
            raise SpecFileError(f"{where}: unknown field {key!r} (known fields: {known})")
        if key in fields:
            raise SpecFileError(f"{where}: duplicate field {key!r}")
        if not raw:
            raise SpecFileError(f"{where}: field {key!r} has no value")
        fields[key] = _cast(key, raw, where)
    return fields


def parse_overrides(pairs: Iterable[str]) -> dict[str, float | str]:
    """Parse ``--set key=value`` pairs into a field mapping."""
    out: dict[str, float | str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise SpecFileError(f"override {pair!r}: expected key=value")
        key, _, raw = pair.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in KNOWN_FIELDS:
            known = ", ".join(sorted(KNOWN_FIELDS))
            raise SpecFileError(f"override {pair!r}: unknown field {key!r} (known fields: {known})")
        out[key] = _cast(key, raw, f"override {pair!r}")
    return out


def build_spec(fields: Mapping[str, float | str], source: str = "<fields>") -> CoefficientSpec:
    """Construct a CoefficientSpec from a flat field mapping."""
    for field in ("rate.amplitude", "rate.gamma", "daughter.variant"):
        if field not in fields:
            raise SpecFileError(f"{source}: missing required field {field!r}")
    variant = fields["daughter.variant"]
    if variant not in _VARIANTS:
        raise SpecFileError(
            f"{source}: field 'daughter.variant' must be one of {', '.join(_VARIANTS)}, "
            f"got {variant!r}"
        )
    if variant == "power_law" and "daughter.nu" not in fields:
        raise SpecFileError(f"{source}: power_law daughters need field 'daughter.nu'")
    if variant == "log_power" and "daughter.theta" not in fields:
        raise SpecFileError(f"{source}: log_power daughters need field 'daughter.theta'")
    try:
        rate = RateSpec(
            amplitude=float(fields["rate.amplitude"]),
            exponent=float(fields["rate.gamma"]),
        )
        daughter = DaughterSpec(
            variant=str(variant),
            nu=_opt(fields, "daughter.nu"),
            theta=_opt(fields, "daughter.theta"),
            chi=_opt(fields, "daughter.chi"),
            m0=float(fields.get("daughter.m0", 1.0)),
            lam=_opt(fields, "daughter.lambda"),
        )
    except DomainError as exc:
        raise SpecFileError(f"{source}: {exc}") from exc
    return CoefficientSpec(rate=rate, daughter=daughter)


def _opt(fields: Mapping[str, float | str], key: str) -> float | None:
    value = fields.get(key)
    return None if value is None else float(value)


def load_spec(path: str | Path, overrides: Iterable[str] = ()) -> CoefficientSpec:
    """Load a coefficient spec from a file, applying override pairs."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecFileError(f"cannot read spec file {path}: {exc}") from exc
    fields = parse_spec_text(text, source=str(path))
    fields.update(parse_overrides(overrides))
    return build_spec(fields, source=str(path))


def spec_fields(spec: CoefficientSpec) -> dict[str, float | str]:
    """Flatten a file-representable spec back into its field mapping."""
    if not spec.rate.is_power_law:
        raise UnsupportedOperationError("a general rate has no spec-file representation")
    d = spec.daughter
    if d.variant not in _VARIANTS:
        raise UnsupportedOperationError(
            f"daughter variant {d.variant!r} has no spec-file representation"
        )
    fields: dict[str, float | str] = {
        "rate.amplitude": spec.rate.amplitude,
        "rate.gamma": spec.rate.exponent,
        "daughter.variant": d.variant,
    }
    for key, value in (
        ("daughter.nu", d.nu),
        ("daughter.theta", d.theta),
        ("daughter.chi", d.chi),
        ("daughter.lambda", d.lam),
    ):
        if value is not None:
            fields[key] = value
    if d.m0 != 1.0:
        fields["daughter.m0"] = d.m0
    return fields
