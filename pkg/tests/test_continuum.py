"""
Tests comparing the shell forms with their three-dimensional counterparts.
"""

import math

import numpy as np
import pytest

from trimshell.assembly import MaterialParams, generalized_strains
from trimshell.continuum import (
    body_energy_density,
    body_strain,
    cartesian_strain,
    covariant_strain,
    plane_stress_body_strain,
    plane_stress_strain_33,
    shell_energy_density,
    shell_inertia_density,
    strain_expansion,
    through_thickness_inertia,
)
from trimshell.geometry import SurfaceChart, frame_at, volume_frame_at


def random_points(chart, n, seed):
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(chart.lo), np.asarray(chart.hi)
    return lo + (hi - lo) * rng.uniform(0.1, 0.9, (n, 2))


def random_spd(rng, n):
    A = rng.normal(size=(n, 2, 2))
    return np.einsum("nab,ncb->nac", A, A) + 0.5 * np.eye(2)


class TestBodyStrain:
    """3D strains of the shell displacement field against the generalized strains."""

    @pytest.mark.parametrize(
        "chart",
        [SurfaceChart.rotated_plate(0.4), SurfaceChart.cylinder(1.0), SurfaceChart.cylinder(0.6)],
        ids=lambda c: c.kind,
    )
    @pytest.mark.parametrize("xi3", [-0.025, 0.01, 0.02])
    def test_strain_expansion(self, chart, xi3):
        tau = 0.05
        xi = random_points(chart, 12, 0)
        rng = np.random.default_rng(1)
        du = rng.normal(size=(12, 3, 2))
        theta = rng.normal(size=(12, 2))
        dtheta = rng.normal(size=(12, 2, 2))
        frame = frame_at(chart, xi)
        vol = volume_frame_at(chart, xi, xi3, tau)

        eps = body_strain(frame, vol.g, du, theta, dtheta, xi3)
        strains = generalized_strains(frame, du, theta, dtheta)

        np.testing.assert_allclose(eps[:, :2, :2], strain_expansion(strains, xi3), atol=1e-12)
        np.testing.assert_allclose(eps[:, :2, 2], 0.5 * strains.shear, atol=1e-12)
        np.testing.assert_allclose(eps[:, 2, 2], 0.0, atol=1e-12)

    def test_covariant_matches_cartesian(self):
        rng = np.random.default_rng(2)
        chart = SurfaceChart.cylinder(0.8)
        xi = random_points(chart, 6, 3)
        g = volume_frame_at(chart, xi, 0.01, 0.05).g
        grad_x = rng.normal(size=(6, 3, 3))
        grad = np.einsum("nkl,nli->nki", grad_x, g)
        np.testing.assert_allclose(
            covariant_strain(g, grad), cartesian_strain(g, grad_x), atol=1e-12
        )


class TestPlaneStress:
    """Elimination of the normal strain from the 3D energy."""

    def test_normal_stress_vanishes(self):
        rng = np.random.default_rng(4)
        a_con = random_spd(rng, 10)
        membrane = rng.normal(size=(10, 2, 2))
        membrane = 0.5 * (membrane + np.swapaxes(membrane, 1, 2))
        lam, mu = 0.7, 1.3
        e33 = plane_stress_strain_33(a_con, membrane, lam, mu)
        trace = np.einsum("nab,nab->n", a_con, membrane) + e33
        np.testing.assert_allclose(lam * trace + 2.0 * mu * e33, 0.0, atol=1e-12)

    def test_energy_identity_random_states(self):
        rng = np.random.default_rng(5)
        n = 50
        a_con = random_spd(rng, n)
        membrane = rng.normal(size=(n, 2, 2))
        membrane = 0.5 * (membrane + np.swapaxes(membrane, 1, 2))
        shear = rng.normal(size=(n, 2))
        for lam, mu in [(0.5, 1.0), (2.0, 0.3), (MaterialParams().lam, MaterialParams().mu)]:
            eps = plane_stress_body_strain(a_con, membrane, shear, lam, mu)
            body = body_energy_density(a_con, eps, lam, mu)
            shell = shell_energy_density(a_con, membrane, shear, lam, mu)
            np.testing.assert_allclose(body, shell, rtol=1e-12)
            assert np.all(shell > 0.0)

    def test_pure_shear_energy(self):
        a_con = np.eye(2)[None]
        shear = np.array([[0.3, -0.4]])
        zero = np.zeros((1, 2, 2))
        energy = shell_energy_density(a_con, zero, shear, 1.0, 2.0)
        assert energy[0] == pytest.approx(0.5 * 2.0 * 0.25)


class TestInertia:
    """Through-thickness integration of the kinetic energy density."""

    def test_flat_plate(self):
        mat = MaterialParams(rho=7.8, tau=0.05)
        chart = SurfaceChart.rotated_plate(0.3)
        xi = random_points(chart, 15, 6)
        rng = np.random.default_rng(7)
        u, theta, v, phi = (rng.normal(size=(15, 3)) for _ in range(4))
        body = through_thickness_inertia(chart, xi, mat, (u, theta), (v, phi))
        shell = shell_inertia_density(mat, (u, theta), (v, phi))
        np.testing.assert_allclose(body, shell, rtol=1e-10)

    def test_cylinder_curvature_coupling(self):
        R = 0.5
        mat = MaterialParams(rho=2.0, tau=0.08)
        chart = SurfaceChart.cylinder(R)
        xi = random_points(chart, 8, 8)
        rng = np.random.default_rng(9)
        u, theta, v, phi = (rng.normal(size=(8, 3)) for _ in range(4))
        body = through_thickness_inertia(chart, xi, mat, (u, theta), (v, phi))
        shell = shell_inertia_density(mat, (u, theta), (v, phi))
        # sqrt(g) / sqrt(a) = 1 + xi3 / R couples u and theta
        cross = np.einsum("nk,nk->n", u, phi) + np.einsum("nk,nk->n", theta, v)
        np.testing.assert_allclose(body - shell, mat.rho_theta / R * cross, atol=1e-12)
        assert math.isclose(mat.rho_theta, 2.0 * 0.08**3 / 12.0)
