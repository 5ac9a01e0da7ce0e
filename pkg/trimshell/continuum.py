"""
Three-dimensional counterparts of the shell quantities.

The shell body is {F(xi) + xi3 a3(xi) : xi in S, |xi3| <= tau / 2} with covariant
basis g_alpha = a_alpha + xi3 a3_{,alpha}, g3 = a3. The functions below evaluate
strains, elastic energy and inertia of the 3D body directly, so that the 2D shell
forms can be checked against them:

- covariant strains eps_ij = 1/2 (g_i . U_{,j} + g_j . U_{,i}) equal the Cartesian
  strain 1/2 (grad U + grad U^T) contracted with g_i and g_j;
- for U = u + xi3 theta with theta tangent, eps_{alpha beta} = epsilon
  + xi3 kappa + xi3^2 chi and eps_33 = 0;
- eliminating eps_33 through the plane stress condition turns the 3D energy
  density into the shell membrane + shear density;
- integrating rho U . V through the thickness of a flat plate gives
  rho_u u . v + rho_theta theta . phi.
"""

from typing import Tuple

import numpy as np

from .assembly import GeneralizedStrains, MaterialParams, elasticity_tensor
from .geometry import SurfaceChart, SurfaceFrame, frame_at, volume_frame_at
from .trimming import gauss_rule_01


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def covariant_strain(g: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """eps_ij = 1/2 (g_i . U_{,j} + g_j . U_{,i}).

    Args:
        g: Covariant basis vectors as columns, shape (..., 3, 3).
        grad: Parametric derivatives U_{,i} as columns, shape (..., 3, 3).
    """
    return _sym(np.einsum("...ki,...kj->...ij", g, grad))


def cartesian_strain(g: np.ndarray, grad_x: np.ndarray) -> np.ndarray:
    """Cartesian strain 1/2 (dU_k/dx_l + dU_l/dx_k) contracted with g_i, g_j."""
    return np.einsum("...ki,...kl,...lj->...ij", g, _sym(grad_x), g)


def body_strain(
    frame: SurfaceFrame,
    g: np.ndarray,
    du: np.ndarray,
    theta: np.ndarray,
    dtheta: np.ndarray,
    xi3: float,
) -> np.ndarray:
    """3D covariant strain of U = u + xi3 theta_alpha a^alpha.

    Args:
        frame: Mid-surface frame.
        g: Covariant basis of the body at xi3, shape (..., 3, 3).
        du: u_{,alpha}, shape (..., 3, 2).
        theta: Covariant rotation components, shape (..., 2).
        dtheta: theta_{alpha,beta}, shape (..., 2, 2).
        xi3: Thickness coordinate.
    """
    theta_amb = np.einsum("...kg,...g->...k", frame.Qmat, theta)
    dtheta_amb = np.einsum("...kg,...gb->...kb", frame.Qmat, dtheta) + np.einsum(
        "...kgb,...g->...kb", frame.d_con, theta
    )
    grad = np.concatenate([du + xi3 * dtheta_amb, theta_amb[..., None]], axis=-1)
    return covariant_strain(g, grad)


def strain_expansion(strains: GeneralizedStrains, xi3: float) -> np.ndarray:
    """epsilon + xi3 kappa + xi3^2 chi."""
    return strains.membrane + xi3 * strains.bending + xi3**2 * strains.high_order


def _metric_3d(a_con: np.ndarray) -> np.ndarray:
    out = np.zeros(a_con.shape[:-2] + (3, 3))
    out[..., :2, :2] = a_con
    out[..., 2, 2] = 1.0
    return out


def plane_stress_strain_33(
    a_con: np.ndarray, membrane: np.ndarray, lam: float, mu: float
) -> np.ndarray:
    """Normal strain eps_33 = -lam a^{ab} eps_ab / (lam + 2 mu) making sigma^33 vanish."""
    return -lam * np.einsum("...ab,...ab->...", a_con, membrane) / (lam + 2.0 * mu)


def body_energy_density(
    a_con: np.ndarray, eps: np.ndarray, lam: float, mu: float
) -> np.ndarray:
    """1/2 A^{ijkl} eps_ij eps_kl of an isotropic body with Lame-type constants lam, mu."""
    G = _metric_3d(a_con)
    trace = np.einsum("...ij,...ij->...", G, eps)
    raised = np.einsum("...ik,...kl,...lj->...ij", G, eps, G)
    return 0.5 * (lam * trace**2 + 2.0 * mu * np.einsum("...ij,...ij->...", raised, eps))


def plane_stress_body_strain(
    a_con: np.ndarray, membrane: np.ndarray, shear: np.ndarray, lam: float, mu: float
) -> np.ndarray:
    """3D strain with eps_{a3} = gamma_a / 2 and eps_33 from the plane stress condition."""
    eps = np.zeros(membrane.shape[:-2] + (3, 3))
    eps[..., :2, :2] = membrane
    eps[..., :2, 2] = eps[..., 2, :2] = 0.5 * shear
    eps[..., 2, 2] = plane_stress_strain_33(a_con, membrane, lam, mu)
    return eps


def shell_energy_density(
    a_con: np.ndarray, membrane: np.ndarray, shear: np.ndarray, lam: float, mu: float
) -> np.ndarray:
    """1/2 E^{abcd} eps_ab eps_cd + 1/2 mu a^{ab} gamma_a gamma_b."""
    E = elasticity_tensor(a_con, lam, mu)
    membrane_part = 0.5 * np.einsum("...abcd,...ab,...cd->...", E, membrane, membrane)
    return membrane_part + 0.5 * mu * np.einsum("...ab,...a,...b->...", a_con, shear, shear)


def through_thickness_inertia(
    chart: SurfaceChart,
    xi: np.ndarray,
    material: MaterialParams,
    u: Tuple[np.ndarray, np.ndarray],
    v: Tuple[np.ndarray, np.ndarray],
    order: int = 4,
) -> np.ndarray:
    """int rho U . V sqrt(g) / sqrt(a) dxi3 over the thickness at mid-surface points.

    Args:
        chart: Mid-surface chart.
        xi: Parametric points, shape (n, 2).
        material: Supplies rho and tau.
        u: Ambient (displacement, rotation) pair of U = u + xi3 theta.
        v: Same for the test field V.
        order: Gauss points through the thickness.
    """
    tau = material.tau
    sqrt_a = frame_at(chart, xi).sqrt_a
    s, w = gauss_rule_01(order)
    total = np.zeros(np.shape(xi)[0])
    for sk, wk in zip(s, w):
        xi3 = (sk - 0.5) * tau
        vol = volume_frame_at(chart, xi, xi3, tau)
        U = u[0] + xi3 * u[1]
        V = v[0] + xi3 * v[1]
        total += wk * tau * material.rho * np.einsum("nk,nk->n", U, V) * vol.sqrt_g / sqrt_a
    return total


def shell_inertia_density(
    material: MaterialParams,
    u: Tuple[np.ndarray, np.ndarray],
    v: Tuple[np.ndarray, np.ndarray],
) -> np.ndarray:
    """rho_u u . v + rho_theta theta . phi."""
    translational = material.rho_u * np.einsum("nk,nk->n", u[0], v[0])
    return translational + material.rho_theta * np.einsum("nk,nk->n", u[1], v[1])
