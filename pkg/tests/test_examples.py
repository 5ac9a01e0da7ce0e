"""
Tests for the benchmark problem builders.
"""

import math
import warnings

import numpy as np
import pytest

from trimshell.assembly import ALL_FIELDS
from trimshell.config import ExperimentConfig
from trimshell.errors import ConfigurationError, ModelValidityWarning
from trimshell.examples import BUILDERS, build_example
from trimshell.geometry import frame_at
from trimshell.trimming import classify_elements


def problem(example: str, **kwargs):
    return build_example(ExperimentConfig(example=example, **kwargs))


class TestTrimmedPlate:
    """Test the plate trimmed on all sides."""

    def test_grid_offset(self):
        prob = problem("plate_trimmed", n=8, eps=0.1)
        h = 1.0 / 6.2
        assert prob.grid.h == pytest.approx((h, h))
        assert prob.grid.lo[0] == pytest.approx(-0.5 - 0.9 * h)
        assert prob.grid.hi[1] == pytest.approx(0.5 + 0.9 * h)
        assert prob.params["h"] == pytest.approx(h)
        assert prob.region.area == pytest.approx(1.0)
        assert prob.dirichlet == {}
        assert prob.n_rigid_modes == 6

    def test_boundary_ring_is_cut(self):
        prob = problem("plate_trimmed", n=6, eps=0.1)
        mesh = classify_elements(prob.grid, prob.region)
        assert len(mesh.cut_elements) == 20
        assert len(mesh.active_elements) == 36
        fractions = [mesh.fraction[e] for e in mesh.cut_elements]
        assert min(fractions) == pytest.approx(0.01)

    def test_untrimmed(self):
        prob = problem("plate_trimmed", n=4, trim_enabled=False)
        assert prob.grid.lo == (-0.5, -0.5)
        mesh = classify_elements(prob.grid, prob.region)
        assert mesh.cut_elements == []

    def test_frequency_and_end_time(self):
        prob = problem("plate_trimmed", n=4)
        assert prob.omega == pytest.approx(0.1)
        assert prob.default_t1 == pytest.approx(5.0 * math.pi)
        assert prob.exact is not None

    def test_initial_fields(self):
        prob = problem("plate_trimmed", n=4)
        xi = np.array([[0.1, -0.2], [0.3, 0.3]])
        frame = frame_at(prob.chart, xi)
        u, theta = prob.u0(frame, xi)
        np.testing.assert_allclose(u, 0.0)
        np.testing.assert_allclose(theta, 0.0)
        v, _ = prob.v0(frame, xi)
        np.testing.assert_allclose(v[:, 2], 0.1 * prob.exact.w(xi))
        exact = prob.exact_at(prob.default_t1)
        u1, _ = exact(frame, xi)
        np.testing.assert_allclose(u1[:, 2], prob.exact.w(xi))


class TestRotatedPlate:
    """Test the rotated plate with prescribed data."""

    def test_grid_and_constraints(self):
        prob = problem("rotated_plate", n=5, eps=0.1)
        h = 1.0 / 4.1
        assert prob.grid.lo[0] == pytest.approx(-0.5)
        assert prob.grid.hi[1] == pytest.approx(0.5)
        assert prob.grid.lo[1] == pytest.approx(0.5 - 5 * h)
        assert prob.grid.hi[0] == pytest.approx(-0.5 + 5 * h)
        assert prob.dirichlet == {"left": ALL_FIELDS, "top": ALL_FIELDS}
        assert prob.n_rigid_modes == 0
        assert prob.exact is None
        assert prob.exact_at(1.0) is None
        assert prob.load.neumann == ("right", "bottom")
        assert prob.chart.kind == "rotated_plate"

    def test_initial_velocity(self):
        prob = problem("rotated_plate", n=4)
        xi = np.array([[-0.25, 0.25]])
        frame = frame_at(prob.chart, xi)
        v, omega = prob.v0(frame, xi)
        x1 = frame.x[0, 0]
        expected = 7.74e-5 * math.exp(6.0 * x1) * math.sin(28.0 * math.pi * x1)
        assert v[0, 2] == pytest.approx(expected)
        np.testing.assert_allclose(omega, 0.0)


class TestCutout:
    """Test the plate with a square hole."""

    def test_hole_snaps_to_grid_line(self):
        prob = problem("plate_cutout", n=10, eps=0.01)
        assert prob.params["hole"] == pytest.approx(0.2 - 0.001)
        assert prob.region.area == pytest.approx(1.0 - (2 * 0.199) ** 2)
        assert set(prob.dirichlet) == {"left", "right", "bottom", "top"}
        assert prob.omega == pytest.approx(0.5)

    def test_untrimmed_hole_on_grid_line(self):
        prob = problem("plate_cutout", n=10, trim_enabled=False)
        assert prob.params["hole"] == pytest.approx(0.2)

    def test_coarse_grid_rejected(self):
        with pytest.raises(ConfigurationError, match="cannot resolve the cut-out"):
            problem("plate_cutout", n=2)


class TestWindow:
    """Test the cylindrical panel with a window."""

    def test_window_sizing(self):
        prob = problem("fuselage_window", n=10, eps=0.01)
        assert prob.params["window"] == pytest.approx(0.1 - 0.001)
        assert prob.chart.kind == "cylinder"
        assert prob.region.area < 1.0
        assert prob.region.contains(np.array([[0.1, 0.1]]))[0]
        assert not prob.region.contains(np.array([[0.5, 0.5]]))[0]

    def test_coarse_grid_rejected(self):
        with pytest.raises(ConfigurationError, match="cannot resolve the window"):
            problem("fuselage_window", n=2)

    def test_thick_shell_warns(self):
        with pytest.warns(ModelValidityWarning, match="Slenderness"):
            problem("fuselage_window", n=10, tau=2.5)

    def test_thin_shell_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", ModelValidityWarning)
            problem("fuselage_window", n=10, tau=0.05)


class TestBuildExample:
    """Test dispatch."""

    def test_all_examples_registered(self):
        assert set(BUILDERS) == {"plate_trimmed", "rotated_plate", "plate_cutout", "fuselage_window"}

    @pytest.mark.parametrize("example", sorted(BUILDERS))
    def test_material_from_config(self, example):
        prob = problem(example, n=10, E=2.0, nu=0.3, tau=0.02)
        assert prob.material.E == 2.0
        assert prob.material.nu == 0.3
        assert prob.material.tau == 0.02
        assert prob.example == example
