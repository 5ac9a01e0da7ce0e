"""
Tests for manufactured solutions.
"""

import math

import numpy as np
import pytest
import sympy as sp

from trimshell.errors import UnsupportedOrderError
from trimshell.geometry import SurfaceChart, frame_at
from trimshell.manufactured import (
    XI1,
    XI2,
    ManufacturedSolution,
    TimeProfile,
    cutout_amplitude,
    exact_fields_at,
    plate_amplitude,
    window_amplitude,
)


def amplitudes():
    return [
        ("plate", plate_amplitude(), (-0.4, 0.4)),
        ("cutout", cutout_amplitude(), (0.25, 0.45)),
        ("window", window_amplitude(), (0.1, 0.9)),
    ]


class TestTimeProfile:
    """Test phi(t) = sin(omega t)."""

    def test_derivatives(self):
        phi = TimeProfile(3.0)
        t = 0.7
        assert phi(t) == pytest.approx(math.sin(2.1))
        assert phi(t, 1) == pytest.approx(3.0 * math.cos(2.1))
        assert phi(t, 2) == pytest.approx(-9.0 * math.sin(2.1))

    def test_order_three(self):
        with pytest.raises(UnsupportedOrderError, match="order 3"):
            TimeProfile(1.0)(0.0, 3)


class TestAmplitudes:
    """Test closed-form amplitudes and their compiled derivatives."""

    def test_plate_center_value(self):
        sol = ManufacturedSolution(plate_amplitude(), 1.0)
        assert sol.w(np.array([0.0, 0.0])) == pytest.approx(0.4 * math.exp(-2.0 / 0.3))

    def test_cutout_center_value(self):
        sol = ManufacturedSolution(cutout_amplitude(), 1.0)
        assert sol.w(np.array([0.0, 0.0])) == pytest.approx(0.1 * math.e)

    def test_window_center_value(self):
        sol = ManufacturedSolution(window_amplitude(), 1.0)
        expected = 0.1 * math.e / (1.0 + math.exp(-10.0)) ** 2
        assert sol.w(np.array([0.5, 0.5])) == pytest.approx(expected)

    @pytest.mark.parametrize("name,expr,box", amplitudes(), ids=lambda v: v if isinstance(v, str) else "")
    def test_derivatives_finite_difference(self, name, expr, box):
        sol = ManufacturedSolution(expr, 1.0, name=name)
        rng = np.random.default_rng(0)
        xi = rng.uniform(box[0], box[1], (10, 2))
        h = 1e-6
        w, dw, ddw = sol.w_derivatives(xi)
        for a in range(2):
            e = np.zeros(2)
            e[a] = h
            fd = (sol.w(xi + e) - sol.w(xi - e)) / (2 * h)
            np.testing.assert_allclose(dw[:, a], fd, rtol=1e-5, atol=1e-7)
            fd2 = (sol.w_derivatives(xi + e)[1] - sol.w_derivatives(xi - e)[1]) / (2 * h)
            np.testing.assert_allclose(ddw[:, :, a], fd2, rtol=1e-5, atol=1e-6)
        assert w.shape == (10,)

    def test_constant_expression_broadcasts(self):
        sol = ManufacturedSolution(sp.Integer(2) + 0 * XI1, 1.0)
        w, dw, ddw = sol.w_derivatives(np.zeros((4, 2)))
        np.testing.assert_allclose(w, 2.0)
        np.testing.assert_allclose(dw, 0.0)
        assert ddw.shape == (4, 2, 2)


class TestFields:
    """Test displacement and rotation fields."""

    @pytest.fixture
    def window(self):
        return ManufacturedSolution(window_amplitude(), 0.1)

    def test_zero_shear_strain(self, window):
        """Rotations follow the normal so that a3 . u_{,alpha} + theta_alpha = 0."""
        chart = SurfaceChart.cylinder(1.0)
        xi = np.random.default_rng(1).uniform(0.1, 0.9, (8, 2))
        frame = frame_at(chart, xi)
        f = window.spatial_fields(frame, xi)
        shear = np.einsum("nk,nka->na", frame.a3, f.du) + f.theta
        np.testing.assert_allclose(shear, 0.0, atol=1e-12)
        np.testing.assert_allclose(np.einsum("nk,nk->n", f.theta_amb, frame.a3), 0.0, atol=1e-12)

    def test_rotation_derivative_finite_difference(self, window):
        chart = SurfaceChart.cylinder(1.0)
        xi = np.random.default_rng(2).uniform(0.2, 0.8, (6, 2))
        f = window.spatial_fields(frame_at(chart, xi), xi)
        h = 1e-6
        for b in range(2):
            e = np.zeros(2)
            e[b] = h
            plus = window.spatial_fields(frame_at(chart, xi + e), xi + e).theta
            minus = window.spatial_fields(frame_at(chart, xi - e), xi - e).theta
            np.testing.assert_allclose(f.dtheta[:, :, b], (plus - minus) / (2 * h), atol=1e-6)

    def test_time_dependence(self, window):
        chart = SurfaceChart.cylinder(1.0)
        xi = np.array([[0.45, 0.55], [0.6, 0.4]])
        t = 3.0
        f = exact_fields_at(window, chart, xi, t)
        base = window.spatial_fields(frame_at(chart, xi), xi)
        s, c = math.sin(0.3), math.cos(0.3)
        np.testing.assert_allclose(f.u, s * base.u)
        np.testing.assert_allclose(f.u_dot, 0.1 * c * base.u)
        np.testing.assert_allclose(f.u_ddot, -0.01 * s * base.u)
        np.testing.assert_allclose(f.theta_ddot, -0.01 * s * base.theta_amb)
        u, theta = window.displacement(frame_at(chart, xi), xi, t)
        np.testing.assert_allclose(u, f.u)
        np.testing.assert_allclose(theta, f.theta_amb)
        v, _ = window.velocity(frame_at(chart, xi), xi, t)
        np.testing.assert_allclose(v, f.u_dot)
