"""
Mid-surface charts and pointwise differential geometry.

A chart maps the parametric domain to the shell mid-surface. Every chart supplies
its map together with exact first and second parametric derivatives; all frame
quantities are then computed analytically:

- covariant basis a_alpha = F_{,alpha} and unit normal a_3 = a_1 x a_2 / |a_1 x a_2|,
- metric a_{alpha beta}, its inverse a^{alpha beta} and the contravariant basis a^alpha,
- curvature b_{alpha beta} = a_{alpha,beta} . a_3 and the normal derivatives a_{3,alpha},
- derivatives of the contravariant basis (needed by the higher-order strain chi).

All functions accept points with arbitrary leading shape ``(..., 2)`` and return
arrays with the same leading shape.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from .errors import DomainError, ModelValidityWarning, SingularChartError

logger = logging.getLogger(__name__)

ChartFn = Callable[[np.ndarray], np.ndarray]

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True, eq=False)
class SurfaceChart:
    """
    Smooth injective map F from a parametric box to R^3.

    Attributes:
        kind: "flat_plate", "rotated_plate", "cylinder" or "affine".
        map: F(xi) -> (..., 3).
        jacobian: dF(xi) -> (..., 3, 2), column alpha is a_alpha.
        hessian: d2F(xi) -> (..., 3, 2, 2), entry [:, alpha, beta] is a_{alpha,beta}.
        lo: Lower corner of the parametric box the chart is defined on.
        hi: Upper corner of the parametric box.
        params: Construction parameters (angle, radius, ...), for reporting.
    """

    kind: str
    map: ChartFn
    jacobian: ChartFn
    hessian: ChartFn
    lo: Tuple[float, float] = (0.0, 0.0)
    hi: Tuple[float, float] = (1.0, 1.0)
    params: dict = field(default_factory=dict)

    @classmethod
    def affine(
        cls,
        a1: np.ndarray,
        a2: np.ndarray,
        origin: np.ndarray = np.zeros(3),
        *,
        kind: str = "affine",
        lo: Tuple[float, float] = (0.0, 0.0),
        hi: Tuple[float, float] = (1.0, 1.0),
        params: dict = None,
    ) -> "SurfaceChart":
        """Planar chart F(xi) = origin + xi_1 a1 + xi_2 a2."""
        A = np.column_stack([np.asarray(a1, float), np.asarray(a2, float)])
        o = np.asarray(origin, dtype=float)

        def F(xi: np.ndarray) -> np.ndarray:
            return o + np.asarray(xi, float) @ A.T

        def dF(xi: np.ndarray) -> np.ndarray:
            xi = np.asarray(xi, float)
            return np.broadcast_to(A, xi.shape[:-1] + (3, 2)).copy()

        def ddF(xi: np.ndarray) -> np.ndarray:
            xi = np.asarray(xi, float)
            return np.zeros(xi.shape[:-1] + (3, 2, 2))

        return cls(kind, F, dF, ddF, lo, hi, dict(params or {}))

    @classmethod
    def flat_plate(
        cls, lo: Tuple[float, float] = (0.0, 0.0), hi: Tuple[float, float] = (1.0, 1.0)
    ) -> "SurfaceChart":
        """Identity embedding of the parametric plane into z = 0."""
        return cls.affine([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], kind="flat_plate", lo=lo, hi=hi)

    @classmethod
    def rotated_plate(
        cls,
        angle: float,
        lo: Tuple[float, float] = (-0.5, -0.5),
        hi: Tuple[float, float] = (0.5, 0.5),
    ) -> "SurfaceChart":
        """Flat plate rotated counterclockwise by ``angle`` (radians) about e3."""
        c, s = math.cos(angle), math.sin(angle)
        return cls.affine(
            [c, s, 0.0],
            [-s, c, 0.0],
            kind="rotated_plate",
            lo=lo,
            hi=hi,
            params={"angle": angle},
        )

    @classmethod
    def cylinder(
        cls,
        radius: float = 1.0,
        lo: Tuple[float, float] = (0.0, 0.0),
        hi: Tuple[float, float] = (1.0, 1.0),
    ) -> "SurfaceChart":
        """Cylindrical panel F = (xi1 - 1/2, R sin(xi2 - 1/2), R cos(xi2 - 1/2))."""
        if radius <= 0:
            raise DomainError("Cylinder radius must be positive")
        R = float(radius)

        def F(xi: np.ndarray) -> np.ndarray:
            xi = np.asarray(xi, float)
            phi = xi[..., 1] - 0.5
            return np.stack([xi[..., 0] - 0.5, R * np.sin(phi), R * np.cos(phi)], axis=-1)

        def dF(xi: np.ndarray) -> np.ndarray:
            xi = np.asarray(xi, float)
            phi = xi[..., 1] - 0.5
            out = np.zeros(xi.shape[:-1] + (3, 2))
            out[..., 0, 0] = 1.0
            out[..., 1, 1] = R * np.cos(phi)
            out[..., 2, 1] = -R * np.sin(phi)
            return out

        def ddF(xi: np.ndarray) -> np.ndarray:
            xi = np.asarray(xi, float)
            phi = xi[..., 1] - 0.5
            out = np.zeros(xi.shape[:-1] + (3, 2, 2))
            out[..., 1, 1, 1] = -R * np.sin(phi)
            out[..., 2, 1, 1] = -R * np.cos(phi)
            return out

        return cls("cylinder", F, dF, ddF, lo, hi, {"radius": R})

    def sample_points(self, n: int = 9) -> np.ndarray:
        """Uniform n x n lattice of parametric points covering the chart box."""
        s1 = np.linspace(self.lo[0], self.hi[0], n)
        s2 = np.linspace(self.lo[1], self.hi[1], n)
        X, Y = np.meshgrid(s1, s2, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)


@dataclass(frozen=True, eq=False)
class SurfaceFrame:
    """
    Pointwise geometric quantities of the mid-surface.

    Attributes:
        x: Physical points F(xi), shape (..., 3).
        cov: Covariant basis, column alpha is a_alpha, shape (..., 3, 2).
        a3: Unit normal, shape (..., 3).
        a_cov: Metric a_{alpha beta}, shape (..., 2, 2).
        a_con: Inverse metric a^{alpha beta}, shape (..., 2, 2).
        det_a: Determinant of the metric, shape (...).
        b: Curvature tensor b_{alpha beta}, shape (..., 2, 2).
        d_cov: a_{alpha,beta}, shape (..., 3, 2, 2).
        dA3: a_{3,alpha}, column alpha, shape (..., 3, 2).
        Qmat: Contravariant basis [a^1, a^2], shape (..., 3, 2).
        d_con: Derivatives of the contravariant basis, entry [:, gamma, beta] is
            a^gamma_{,beta}, shape (..., 3, 2, 2).
    """

    x: np.ndarray
    cov: np.ndarray
    a3: np.ndarray
    a_cov: np.ndarray
    a_con: np.ndarray
    det_a: np.ndarray
    b: np.ndarray
    d_cov: np.ndarray
    dA3: np.ndarray
    Qmat: np.ndarray
    d_con: np.ndarray

    @property
    def a1(self) -> np.ndarray:
        return self.cov[..., 0]

    @property
    def a2(self) -> np.ndarray:
        return self.cov[..., 1]

    @property
    def sqrt_a(self) -> np.ndarray:
        return np.sqrt(self.det_a)


@dataclass(frozen=True, eq=False)
class VolumeFrame:
    """
    Covariant basis of the canonical 3D extension G(xi, xi3) = F(xi) + xi3 a3(xi).

    Attributes:
        g: Covariant vectors as columns [g1, g2, g3], shape (..., 3, 3).
        det_g: Determinant of the metric g_ij, shape (...).
        sqrt_g: det[g1, g2, g3], shape (...).
        xi3: Thickness coordinate.
    """

    g: np.ndarray
    det_g: np.ndarray
    sqrt_g: np.ndarray
    xi3: float

    @property
    def g1(self) -> np.ndarray:
        return self.g[..., 0]

    @property
    def g2(self) -> np.ndarray:
        return self.g[..., 1]

    @property
    def g3(self) -> np.ndarray:
        return self.g[..., 2]


# ============================================================================
# Frame computation
# ============================================================================


def frame_at(chart: SurfaceChart, xi: np.ndarray) -> SurfaceFrame:
    """Evaluate all frame quantities of a chart at parametric points.

    Args:
        chart: Surface chart.
        xi: Points of shape (..., 2).

    Returns:
        SurfaceFrame with leading shape ``xi.shape[:-1]``.

    Raises:
        SingularChartError: If ||a1 x a2|| < 1e-14 at any point.
    """
    xi = np.asarray(xi, dtype=float)
    x = chart.map(xi)
    cov = chart.jacobian(xi)
    d_cov = chart.hessian(xi)
    a1, a2 = cov[..., 0], cov[..., 1]

    c = np.cross(a1, a2)
    norm_c = np.linalg.norm(c, axis=-1)
    if np.any(norm_c < 1e-14):
        raise SingularChartError(
            f"Degenerate {chart.kind} chart: min |a1 x a2| = {float(norm_c.min()):.3e}"
        )
    a3 = c / norm_c[..., None]

    a_cov = np.einsum("...ka,...kb->...ab", cov, cov)
    det_a = a_cov[..., 0, 0] * a_cov[..., 1, 1] - a_cov[..., 0, 1] * a_cov[..., 1, 0]
    a_con = np.linalg.inv(a_cov)
    Qmat = np.einsum("...ab,...kb->...ka", a_con, cov)

    b = np.einsum("...kab,...k->...ab", d_cov, a3)

    # a_{3,alpha} by the quotient rule on c / |c|
    dc = np.cross(d_cov[..., 0, :], a2[..., None, :], axisa=-2, axisb=-1, axisc=-2)
    dc = dc + np.cross(a1[..., None, :], d_cov[..., 1, :], axisa=-1, axisb=-2, axisc=-2)
    proj = np.einsum("...k,...ka->...a", a3, dc)
    dA3 = (dc - a3[..., :, None] * proj[..., None, :]) / norm_c[..., None, None]

    # a^gamma_{,nu} = d(a^{gamma delta}) a_delta + a^{gamma delta} a_{delta,nu}
    da_cov = np.einsum("...kan,...kb->...abn", d_cov, cov)
    da_cov = da_cov + np.swapaxes(da_cov, -3, -2)
    da_con = -np.einsum("...ag,...gdn,...db->...abn", a_con, da_cov, a_con)
    d_con = np.einsum("...gdn,...kd->...kgn", da_con, cov) + np.einsum(
        "...gd,...kdn->...kgn", a_con, d_cov
    )

    return SurfaceFrame(x, cov, a3, a_cov, a_con, det_a, b, d_cov, dA3, Qmat, d_con)


def principal_curvatures(frame: SurfaceFrame) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the pencil (b, a_cov), sorted as (kappa_min, kappa_max)."""
    a = frame.a_cov
    b = frame.b
    det_a = frame.det_a
    trace = (
        b[..., 0, 0] * a[..., 1, 1]
        + b[..., 1, 1] * a[..., 0, 0]
        - 2.0 * b[..., 0, 1] * a[..., 0, 1]
    )
    mean = trace / (2.0 * det_a)
    gauss = (b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0]) / det_a
    root = np.sqrt(np.maximum(mean**2 - gauss, 0.0))
    return mean - root, mean + root


def slenderness(
    chart: SurfaceChart, tau: float, L: float, *, samples: int = 9
) -> Tuple[float, float]:
    """Slenderness ratios eta = R_min / tau and zeta = L / tau.

    R_min is 1 / max|kappa| over a sample lattice of the chart (infinite for flat
    charts). A ModelValidityWarning is issued when eta <= 0.5.
    """
    if tau <= 0:
        raise DomainError(f"Thickness must be positive, got {tau}")
    kmin, kmax = principal_curvatures(frame_at(chart, chart.sample_points(samples)))
    kappa = float(max(np.abs(kmin).max(), np.abs(kmax).max()))
    r_min = math.inf if kappa < 1e-14 else 1.0 / kappa
    eta = r_min / tau
    zeta = L / tau
    if eta <= 0.5:
        warnings.warn(
            f"Slenderness eta = {eta:.3g} <= 0.5: thickness exceeds the curvature radius bound",
            ModelValidityWarning,
            stacklevel=2,
        )
    logger.debug("slenderness of %s chart: eta=%s zeta=%s", chart.kind, eta, zeta)
    return eta, zeta


def volume_frame_at(
    chart: SurfaceChart, xi: np.ndarray, xi3: float, tau: float
) -> VolumeFrame:
    """Covariant basis g_alpha = a_alpha + xi3 a_{3,alpha}, g3 = a3 of the 3D extension."""
    if abs(xi3) > 0.5 * tau * (1.0 + 1e-12):
        raise DomainError(f"xi3 = {xi3} outside (-tau/2, tau/2) with tau = {tau}")
    frame = frame_at(chart, xi)
    g = np.concatenate([frame.cov + xi3 * frame.dA3, frame.a3[..., None]], axis=-1)
    sqrt_g = np.linalg.det(g)
    return VolumeFrame(g=g, det_g=sqrt_g**2, sqrt_g=sqrt_g, xi3=float(xi3))
