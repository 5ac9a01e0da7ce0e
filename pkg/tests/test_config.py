"""
Tests for experiment configuration files.
"""

import textwrap

import pytest

from trimshell.config import (
    KEYS,
    ExperimentConfig,
    config_to_text,
    load_config,
    parse_config,
)
from trimshell.errors import ConfigurationError


class TestExperimentConfig:
    """Test defaults and derived properties."""

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.p == 3
        assert config.n == 16
        assert config.eps == 1e-8
        assert config.mass_kind == "stabilized_lumped"
        assert config.snapshots == (0.25, 0.5, 1.0)
        assert config.stabilized and config.lumped
        assert config.resolved_scheme == "central_difference"

    def test_auto_scheme_for_consistent_mass(self):
        config = ExperimentConfig(mass_kind="stabilized_consistent")
        assert config.stabilized and not config.lumped
        assert config.resolved_scheme == "newmark"
        assert config.replace(scheme="central_difference").resolved_scheme == "central_difference"

    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"example": "b_pillar"}, "Unknown example"),
            ({"p": 0}, "disc.p"),
            ({"n": 1}, "disc.n"),
            ({"eps": 0.0}, "trim.eps"),
            ({"eps": 0.5}, "trim.eps"),
            ({"gamma": 1.5}, "stab.gamma"),
            ({"tau": -0.1}, "mat.tau"),
            ({"mass_kind": "diagonal"}, "Unknown mass kind"),
            ({"dt_from": "exact"}, "Unknown mass kind"),
            ({"sweep_kinds": ("lumped", "other")}, "Unknown mass kind"),
            ({"scheme": "rk4"}, "Unknown time scheme"),
            ({"safety": 1.2}, "time.safety"),
        ],
    )
    def test_validation(self, kwargs, match):
        with pytest.raises(ConfigurationError, match=match):
            ExperimentConfig(**kwargs)


class TestParseConfig:
    """Test the key = value format."""

    def test_parse(self):
        text = textwrap.dedent(
            """
        # trimmed plate, coarse
        example.id = plate_cutout
        disc.p = 2
        disc.n = 8   # elements per direction
        trim.eps = 1e-4
        trim.enabled = no
        mass.kind = lumped
        out.snapshots = 0.5, 1.0
        sweep.kinds = consistent,lumped
        """
        )
        config = parse_config(text)
        assert config.example == "plate_cutout"
        assert (config.p, config.n) == (2, 8)
        assert config.eps == pytest.approx(1e-4)
        assert config.trim_enabled is False
        assert config.mass_kind == "lumped"
        assert config.snapshots == (0.5, 1.0)
        assert config.sweep_kinds == ("consistent", "lumped")
        assert config.tau == 0.05

    def test_empty_text_gives_defaults(self):
        assert parse_config("") == ExperimentConfig()

    def test_text_round_trip(self):
        config = ExperimentConfig(
            example="fuselage_window", p=2, eps=0.01, stress=True, snapshots=(1.0,)
        )
        text = config_to_text(config)
        assert len(text.splitlines()) == len(KEYS)
        assert parse_config(text) == config

    @pytest.mark.parametrize(
        "text,match",
        [
            ("disc.order = 3", "Unknown config key"),
            ("disc.n = many", "Invalid value for 'disc.n'"),
            ("out.stress = maybe", "Invalid value for 'out.stress'"),
            ("disc.n = 4\ndisc.n = 8", "Malformed config"),
            ("just text", "Malformed config"),
        ],
    )
    def test_errors(self, text, match):
        with pytest.raises(ConfigurationError, match=match):
            parse_config(text)

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("example.id = rotated_plate\ntime.t1 = 0.5\n", encoding="utf-8")
        config = load_config(path)
        assert config.example == "rotated_plate"
        assert config.t1 == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="does not exist"):
            load_config(tmp_path / "absent.cfg")
