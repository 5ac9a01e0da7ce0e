"""
Manufactured solutions with exact derivatives.

Every solution has the separable form

    u(xi, t) = w(xi) phi(t) e3,    theta_alpha(xi, t) = -(a3 . e3) w_{,alpha}(xi) phi(t),

with phi(t) = sin(omega t). The covariant rotation components give the ambient
rotation theta = theta_alpha a^alpha, which lies in the tangent plane, and for
plates reduce to theta = -sum_i w_{,i} phi a^i.

The spatial part w is a closed-form sympy expression in the parametric
coordinates; first and second derivatives are obtained symbolically and compiled
with ``sympy.lambdify`` for vectorized numpy evaluation.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
import sympy as sp

from .errors import UnsupportedOrderError
from .geometry import SurfaceChart, SurfaceFrame, frame_at

XI1, XI2 = sp.symbols("xi1 xi2", real=True)

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True)
class TimeProfile:
    """phi(t) = sin(omega t) and its derivatives."""

    omega: float

    def __call__(self, t: float, order: int = 0) -> float:
        w = self.omega
        if order == 0:
            return math.sin(w * t)
        if order == 1:
            return w * math.cos(w * t)
        if order == 2:
            return -w * w * math.sin(w * t)
        raise UnsupportedOrderError(f"Time derivative order {order} not available")


@dataclass(frozen=True, eq=False)
class ExactFields:
    """
    Exact fields at points.

    Attributes:
        u: Displacement, shape (n, 3).
        theta: Covariant rotation components theta_alpha, shape (n, 2).
        theta_amb: Ambient rotation vector theta_alpha a^alpha, shape (n, 3).
        du: Parametric derivatives u_{,alpha}, shape (n, 3, 2).
        dtheta: theta_{alpha,beta}, shape (n, 2, 2).
        u_dot: Velocity (None for purely spatial fields).
        u_ddot: Acceleration.
        theta_dot: Ambient rotation rate.
        theta_ddot: Ambient rotation acceleration.
    """

    u: np.ndarray
    theta: np.ndarray
    theta_amb: np.ndarray
    du: np.ndarray
    dtheta: np.ndarray
    u_dot: Optional[np.ndarray] = None
    u_ddot: Optional[np.ndarray] = None
    theta_dot: Optional[np.ndarray] = None
    theta_ddot: Optional[np.ndarray] = None


def _compile(expr: sp.Expr) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    fn = sp.lambdify((XI1, XI2), expr, "numpy")

    def evaluate(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(fn(x1, x2), dtype=float), np.shape(x1)).copy()

    return evaluate


class ManufacturedSolution:
    """
    Separable manufactured solution u = w phi e3 with tangent rotations.

    Args:
        w: Sympy expression of the spatial amplitude in ``XI1``, ``XI2``.
        omega: Angular frequency of phi(t) = sin(omega t).
        name: Label used in reports.
        params: Parameter values, for reporting.
    """

    def __init__(
        self,
        w: sp.Expr,
        omega: float,
        *,
        name: str = "manufactured",
        params: Optional[Dict[str, float]] = None,
    ):
        self.name = name
        self.params = dict(params or {})
        self.expr = w
        self.phi = TimeProfile(float(omega))
        grad = [sp.diff(w, s) for s in (XI1, XI2)]
        self._w = _compile(w)
        self._dw = [_compile(g) for g in grad]
        self._ddw = [[_compile(sp.diff(g, s)) for s in (XI1, XI2)] for g in grad]

    @property
    def omega(self) -> float:
        return self.phi.omega

    def w(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self._w(xi[..., 0], xi[..., 1])

    def w_derivatives(self, xi: np.ndarray):
        """Return (w, grad w (..., 2), hessian w (..., 2, 2))."""
        xi = np.asarray(xi, dtype=float)
        x1, x2 = xi[..., 0], xi[..., 1]
        w = self._w(x1, x2)
        dw = np.stack([f(x1, x2) for f in self._dw], axis=-1)
        ddw = np.stack(
            [np.stack([f(x1, x2) for f in row], axis=-1) for row in self._ddw], axis=-2
        )
        return w, dw, ddw

    def spatial_fields(self, frame: SurfaceFrame, xi: np.ndarray) -> ExactFields:
        """Fields at phi = 1 (the spatial amplitudes)."""
        w, dw, ddw = self.w_derivatives(xi)
        shape = np.shape(w)
        u = np.zeros(shape + (3,))
        u[..., 2] = w
        du = np.zeros(shape + (3, 2))
        du[..., 2, :] = dw
        # a3 . u_{,alpha} = (a3 . e3) w_{,alpha}
        s = frame.a3[..., 2]
        ds = frame.dA3[..., 2, :]
        theta = -s[..., None] * dw
        dtheta = -(dw[..., :, None] * ds[..., None, :] + s[..., None, None] * ddw)
        theta_amb = np.einsum("...kg,...g->...k", frame.Qmat, theta)
        return ExactFields(u=u, theta=theta, theta_amb=theta_amb, du=du, dtheta=dtheta)

    def fields_at(self, frame: SurfaceFrame, xi: np.ndarray, t: float) -> ExactFields:
        """Time-dependent exact fields and their time derivatives at t."""
        base = self.spatial_fields(frame, xi)
        p0, p1, p2 = self.phi(t, 0), self.phi(t, 1), self.phi(t, 2)
        return ExactFields(
            u=p0 * base.u,
            theta=p0 * base.theta,
            theta_amb=p0 * base.theta_amb,
            du=p0 * base.du,
            dtheta=p0 * base.dtheta,
            u_dot=p1 * base.u,
            u_ddot=p2 * base.u,
            theta_dot=p1 * base.theta_amb,
            theta_ddot=p2 * base.theta_amb,
        )

    def displacement(self, frame: SurfaceFrame, xi: np.ndarray, t: float):
        """(u, theta_amb) at time t, the callable form used by projections and norms."""
        f = self.spatial_fields(frame, xi)
        p0 = self.phi(t, 0)
        return p0 * f.u, p0 * f.theta_amb

    def velocity(self, frame: SurfaceFrame, xi: np.ndarray, t: float):
        f = self.spatial_fields(frame, xi)
        p1 = self.phi(t, 1)
        return p1 * f.u, p1 * f.theta_amb


def exact_fields_at(
    sol: ManufacturedSolution, chart: SurfaceChart, xi: np.ndarray, t: float
) -> ExactFields:
    """Exact fields of a manufactured solution, with first parametric derivatives."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    return sol.fields_at(frame_at(chart, xi), xi, t)


# ============================================================================
# Closed-form amplitudes
# ============================================================================


def plate_amplitude(a0: float = 0.1, b0: float = 0.3, n0: float = 5.0) -> sp.Expr:
    """w = a0 w1 w2 wn on the square plate centered at the origin."""

    def w_dir(x: sp.Symbol) -> sp.Expr:
        return sp.exp((2 * x - 1) / b0) + sp.exp((-2 * x - 1) / b0)

    wn = sp.cos(4 * sp.pi * n0 * (XI1**2 + XI2**2))
    return a0 * w_dir(XI1) * w_dir(XI2) * wn


def cutout_amplitude(
    a0: float = 0.1, n0: float = 4.0, n: int = 6, a: float = 0.2
) -> sp.Expr:
    """w = a0 w0(R) wn(R) with a rounded-diamond radial coordinate R(xi)."""
    R = (
        sp.Rational(1, 2) * (((XI1 + XI2) / a) ** n + ((XI1 - XI2) / a) ** n)
    ) ** sp.Rational(1, n)
    return a0 * sp.exp(1 - R**2) * sp.cos(2 * sp.pi * n0 * R)


def window_amplitude(
    a0: float = 0.1,
    beta: float = 10.0,
    n0: float = 3.0,
    n: int = 6,
    a: float = 0.15,
    b: float = 0.2,
) -> sp.Expr:
    """w = a0 w1 w2 wn evaluated at y = xi - (1/2, 1/2)."""
    y1 = XI1 - sp.Rational(1, 2)
    y2 = XI2 - sp.Rational(1, 2)
    w1 = sp.exp(1 - (y1 / a) ** 2)
    w2 = 1 / ((1 + sp.exp(beta * (y2 / a - 1))) * (1 + sp.exp(beta * (-y2 / a - 1))))
    r = (
        sp.Rational(1, 2) * ((y1 / a + y2 / b) ** n + (y1 / a - y2 / b) ** n)
    ) ** sp.Rational(1, n)
    wn = sp.cos(2 * sp.pi * n0 * r)
    return a0 * w1 * w2 * wn
