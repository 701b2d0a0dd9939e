"""Tests for the flat key-value spec-file parser."""

from pathlib import Path

import pytest

from conftest import log_power_spec, power_law_spec
from fragstat.errors import SpecFileError, UnsupportedOperationError
from fragstat.kernels import CoefficientSpec, DaughterSpec, RateSpec
from fragstat.specfile import (
    KNOWN_FIELDS,
    build_spec,
    load_spec,
    parse_overrides,
    parse_spec_text,
    spec_fields,
)

SPECS_DIR = Path(__file__).resolve().parent.parent / "specs"

BASE_TEXT = """\
# constant rate, uniform binary split
rate.amplitude   = 1.0
rate.gamma       = 0.0
daughter.variant = power_law
daughter.nu      = 0.0
"""


class TestParse:
    def test_base_file(self):
        fields = parse_spec_text(BASE_TEXT)
        assert fields == {
            "rate.amplitude": 1.0,
            "rate.gamma": 0.0,
            "daughter.variant": "power_law",
            "daughter.nu": 0.0,
        }

    def test_inline_comments_and_tight_spacing(self):
        fields = parse_spec_text(
            "rate.amplitude=4.0 # quadrupled\nrate.gamma=2\n"
        )
        assert fields["rate.amplitude"] == 4.0
        assert fields["rate.gamma"] == 2.0

    def test_unknown_field_names_line_and_key(self):
        with pytest.raises(SpecFileError, match=r"probe.cfg:2.*'rate.gamm'"):
            parse_spec_text("rate.amplitude = 1\nrate.gamm = 2\n", source="probe.cfg")

    def test_duplicate_field(self):
        with pytest.raises(SpecFileError, match=r":3.*duplicate.*'rate.gamma'"):
            parse_spec_text("rate.amplitude=1\nrate.gamma=1\nrate.gamma=2\n")

    def test_missing_equals(self):
        with pytest.raises(SpecFileError, match=r":1.*expected 'key = value'"):
            parse_spec_text("rate.amplitude 1.0\n")

    def test_bad_number_names_the_field(self):
        with pytest.raises(SpecFileError, match=r"'rate.gamma'.*'abc'"):
            parse_spec_text("rate.gamma = abc\n")

    def test_empty_value(self):
        with pytest.raises(SpecFileError, match="no value"):
            parse_spec_text("rate.gamma =\n")

    def test_known_fields_are_the_documented_eight(self):
        assert set(KNOWN_FIELDS) == {
            "rate.amplitude", "rate.gamma", "daughter.variant", "daughter.nu",
            "daughter.theta", "daughter.chi", "daughter.m0", "daughter.lambda",
        }


class TestBuild:
    def test_base_spec(self):
        spec = build_spec(parse_spec_text(BASE_TEXT))
        assert spec == power_law_spec(0.0, 0.0)

    def test_log_family(self):
        spec = build_spec({
            "rate.amplitude": 1.0, "rate.gamma": 0.0,
            "daughter.variant": "log_power", "daughter.theta": 0.5,
        })
        assert spec == log_power_spec(0.5)

    def test_optional_fields_flow_through(self):
        spec = build_spec({
            "rate.amplitude": 2.0, "rate.gamma": 1.0,
            "daughter.variant": "power_law", "daughter.nu": -1.5,
            "daughter.chi": 3.0, "daughter.m0": 1.5, "daughter.lambda": -0.5,
        })
        assert spec.daughter.chi == 3.0
        assert spec.daughter.m0 == 1.5
        assert spec.daughter.lam == -0.5

    @pytest.mark.parametrize("missing", ["rate.amplitude", "rate.gamma",
                                         "daughter.variant"])
    def test_missing_required_field(self, missing):
        fields = parse_spec_text(BASE_TEXT)
        del fields[missing]
        with pytest.raises(SpecFileError, match=f"missing required field '{missing}'"):
            build_spec(fields)

    def test_power_law_needs_nu(self):
        fields = parse_spec_text(BASE_TEXT)
        del fields["daughter.nu"]
        with pytest.raises(SpecFileError, match="daughter.nu"):
            build_spec(fields)

    def test_log_power_needs_theta(self):
        with pytest.raises(SpecFileError, match="daughter.theta"):
            build_spec({"rate.amplitude": 1.0, "rate.gamma": 0.0,
                        "daughter.variant": "log_power"})

    def test_unrepresentable_variant(self):
        with pytest.raises(SpecFileError, match="power_law, log_power"):
            build_spec({"rate.amplitude": 1.0, "rate.gamma": 0.0,
                        "daughter.variant": "self_similar"})

    def test_range_violations_carry_the_source(self):
        fields = dict(parse_spec_text(BASE_TEXT), **{"daughter.nu": 0.5})
        with pytest.raises(SpecFileError, match=r"bad.cfg:.*nu in \(-2, 0\]"):
            build_spec(fields, source="bad.cfg")


class TestOverrides:
    def test_parse(self):
        assert parse_overrides(["rate.gamma=2.0", "daughter.nu=-1"]) == {
            "rate.gamma": 2.0, "daughter.nu": -1.0,
        }

    def test_needs_equals(self):
        with pytest.raises(SpecFileError, match="expected key=value"):
            parse_overrides(["rate.gamma"])

    def test_unknown_key(self):
        with pytest.raises(SpecFileError, match="unknown field 'solver.n'"):
            parse_overrides(["solver.n=4096"])

    def test_override_wins_on_load(self, tmp_path):
        path = tmp_path / "probe.cfg"
        path.write_text(BASE_TEXT)
        spec = load_spec(path, overrides=["rate.amplitude=4.0"])
        assert spec.rate.amplitude == 4.0
        assert spec.rate.exponent == 0.0


class TestLoad:
    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFileError, match="cannot read spec file"):
            load_spec(tmp_path / "absent.cfg")

    def test_shipped_specs_all_load(self):
        paths = sorted(SPECS_DIR.glob("*.cfg"))
        assert len(paths) == 12
        for path in paths:
            spec = load_spec(path)
            assert spec.rate.amplitude in (1.0, 4.0)

    def test_shipped_base_matches_the_code_built_spec(self):
        assert load_spec(SPECS_DIR / "power_0_0.cfg") == power_law_spec(0.0, 0.0)
        # the shipped log spec additionally records its scaling exponent
        shipped = load_spec(SPECS_DIR / "log_half.cfg")
        assert shipped.daughter.lam == 0.0
        assert shipped == CoefficientSpec(
            rate=RateSpec(1.0, 0.0),
            daughter=DaughterSpec("log_power", theta=0.5, lam=0.0),
        )


class TestRoundTrip:
    @pytest.mark.parametrize("spec", [
        power_law_spec(0.0, 0.0),
        power_law_spec(2.0, -1.5, amplitude=4.0),
        log_power_spec(0.5),
    ])
    def test_fields_rebuild_the_same_spec(self, spec):
        assert build_spec(spec_fields(spec)) == spec

    def test_optional_metadata_survives(self):
        spec = CoefficientSpec(
            rate=RateSpec(2.0, 1.0),
            daughter=DaughterSpec("power_law", nu=-1.5, chi=3.0, m0=2.0, lam=-0.5),
        )
        assert build_spec(spec_fields(spec)) == spec

    def test_general_rate_is_unrepresentable(self):
        spec = CoefficientSpec(
            rate=RateSpec(1.0, 0.0, general=lambda x: x * 0.0 + 1.0),
            daughter=DaughterSpec("power_law", nu=0.0),
        )
        with pytest.raises(UnsupportedOperationError):
            spec_fields(spec)

    def test_callable_daughter_is_unrepresentable(self):
        spec = CoefficientSpec(
            rate=RateSpec(1.0, 0.0),
            daughter=DaughterSpec("self_similar", h=lambda u: u * 0.0 + 2.0),
        )
        with pytest.raises(UnsupportedOperationError):
            spec_fields(spec)
