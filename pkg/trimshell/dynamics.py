"""
Time integration of M u'' + K u = F(t) and error measurement.

Two members of the Newmark family are provided:

- central difference (beta = 0, gamma = 1/2), explicit and conditionally stable,
  meant for a diagonal (lumped) mass;
- average acceleration (beta = 1/4, gamma = 1/2), implicit and unconditionally
  stable, with the effective matrix K + M / (beta dt^2) factorized once.

Both start from the consistent initial acceleration a0 = M^-1 (F(t0) - K d0) and
record the discrete energy 1/2 v.M.v + 1/2 d.K.d alongside user monitors.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sps

from .assembly import ShellDiscretization
from .errors import DomainError, InstabilityError
from .geometry import SurfaceFrame, frame_at
from .logs import log
from .spectrum import LumpedMass, MassLike, scaled_solver

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e12
LATTICE = 5

ExactCallable = Callable[[SurfaceFrame, np.ndarray], Tuple[np.ndarray, np.ndarray]]

# ============================================================================
# Data models
# ============================================================================


@dataclass
class DynState:
    """Time, displacement, velocity and acceleration coefficients."""

    t: float
    d: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def copy(self) -> "DynState":
        return DynState(self.t, self.d.copy(), self.v.copy(), self.a.copy())


@dataclass
class RunResult:
    """
    Outcome of one time integration.

    Attributes:
        history: One row per recorded step (t, energy and monitor columns).
        snapshots: Displacement coefficients at the requested snapshot times.
        final: State at t1.
        dt: Step size actually used.
        n_steps: Number of steps taken.
        wall_time: Seconds spent in the time loop.
        scheme: "central_difference" or "newmark".
    """

    history: pd.DataFrame
    snapshots: Dict[float, np.ndarray]
    final: DynState
    dt: float
    n_steps: int
    wall_time: float
    scheme: str

    @property
    def energy(self) -> np.ndarray:
        return self.history["energy"].to_numpy()


@dataclass(frozen=True)
class ErrorNorms:
    """L2 and sampled maximum errors of displacement and rotation vectors."""

    l2_u: float
    linf_u: float
    l2_theta: float
    linf_theta: float

    def as_row(self) -> Dict[str, float]:
        return {
            "l2_u": self.l2_u,
            "linf_u": self.linf_u,
            "l2_theta": self.l2_theta,
            "linf_theta": self.linf_theta,
        }


# ============================================================================
# Helpers
# ============================================================================


def _as_operator(M: MassLike) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(M, LumpedMass):
        return lambda x: M.diag * x
    return lambda x: M @ x


def _mass_inverse(M: MassLike) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(M, LumpedMass):
        return M.solve
    return scaled_solver(M, "Mass matrix")


def energy(K, M: MassLike, d: np.ndarray, v: np.ndarray) -> float:
    """Discrete energy 1/2 v.M.v + 1/2 d.K.d."""
    return 0.5 * float(v @ _as_operator(M)(v)) + 0.5 * float(d @ (K @ d))


def initial_state(
    K,
    M: MassLike,
    load: Optional[Callable[[float], np.ndarray]],
    d0: np.ndarray,
    v0: np.ndarray,
    t0: float = 0.0,
) -> DynState:
    """State at t0 with the acceleration that satisfies the equation of motion."""
    d0 = np.asarray(d0, dtype=float)
    F = load(t0) if load is not None else np.zeros_like(d0)
    a0 = _mass_inverse(M)(F - K @ d0)
    return DynState(t0, d0.copy(), np.asarray(v0, dtype=float).copy(), np.asarray(a0, dtype=float))


def _steps(t0: float, t1: float, dt: float) -> Tuple[int, float]:
    if dt <= 0:
        raise DomainError(f"Time step must be positive, got {dt}")
    if t1 <= t0:
        raise DomainError("End time must exceed start time")
    n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return n, (t1 - t0) / n


class _Recorder:
    def __init__(
        self,
        K,
        M: MassLike,
        monitor: Optional[Callable[[DynState], Dict[str, float]]],
        record_every: int,
        snapshot_times: Sequence[float],
        dt: float,
    ):
        self.K, self.M = K, M
        self.monitor = monitor
        self.every = max(1, int(record_every))
        self.pending = sorted(float(s) for s in snapshot_times)
        self.dt = dt
        self.rows: List[Dict[str, float]] = []
        self.snapshots: Dict[float, np.ndarray] = {}

    def __call__(self, step: int, state: DynState, last: bool) -> None:
        while self.pending and state.t >= self.pending[0] - 0.5 * self.dt:
            self.snapshots[self.pending.pop(0)] = state.d.copy()
        if step % self.every and not last:
            return
        row = {"step": step, "t": state.t, "energy": energy(self.K, self.M, state.d, state.v)}
        if self.monitor is not None:
            row.update(self.monitor(state))
        self.rows.append(row)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


# ============================================================================
# Integrators
# ============================================================================


def central_difference_run(
    K,
    M: MassLike,
    load: Optional[Callable[[float], np.ndarray]],
    state0: DynState,
    dt: float,
    t1: float,
    *,
    monitor: Optional[Callable[[DynState], Dict[str, float]]] = None,
    record_every: int = 1,
    snapshot_times: Sequence[float] = (),
    verbose: bool = False,
) -> RunResult:
    """Explicit central difference integration from ``state0`` to ``t1``.

    The step is shortened to t1 / ceil((t1 - t0) / dt) so that t1 is hit exactly.

    Raises:
        InstabilityError: If the displacement norm exceeds 1e12 times its Taylor
            bound |d0| + T |v0| + T^2 |a0| / 2 + 1 over the run length T.
    """
    n, h = _steps(state0.t, t1, dt)
    solve = _mass_inverse(M)
    rec = _Recorder(K, M, monitor, record_every, snapshot_times, h)
    s = state0.copy()
    span = t1 - state0.t
    scale = np.linalg.norm(s.d) + span * np.linalg.norm(s.v)
    limit = DIVERGENCE_FACTOR * (scale + 0.5 * span**2 * np.linalg.norm(s.a) + 1.0)
    zero = np.zeros_like(s.d)
    rec(0, s, n == 0)
    start = time.perf_counter()
    for k in range(1, n + 1):
        t = state0.t + k * h
        d = s.d + h * s.v + 0.5 * h * h * s.a
        F = load(t) if load is not None else zero
        a = solve(F - K @ d)
        v = s.v + 0.5 * h * (s.a + a)
        s = DynState(t, d, v, a)
        norm = np.linalg.norm(d)
        if not np.isfinite(norm) or norm > limit:
            raise InstabilityError(
                f"Central difference diverged at step {k} (t = {t:.6e}, |d| = {norm:.3e})",
                step=k,
                time=t,
            )
        rec(k, s, k == n)
    wall = time.perf_counter() - start
    log(
        f"Central difference: {n} steps of {h:.4e} s in {wall:.2f} s",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return RunResult(rec.frame(), rec.snapshots, s, h, n, wall, "central_difference")


def newmark_run(
    K,
    M: MassLike,
    load: Optional[Callable[[float], np.ndarray]],
    state0: DynState,
    dt: float,
    t1: float,
    beta: float = 0.25,
    gamma: float = 0.5,
    *,
    monitor: Optional[Callable[[DynState], Dict[str, float]]] = None,
    record_every: int = 1,
    snapshot_times: Sequence[float] = (),
    verbose: bool = False,
) -> RunResult:
    """Implicit Newmark integration (average acceleration by default).

    Raises:
        SolverError: If the effective matrix cannot be factorized.
    """
    if beta <= 0:
        raise DomainError("Implicit Newmark needs beta > 0")
    n, h = _steps(state0.t, t1, dt)
    a0 = 1.0 / (beta * h * h)
    a2 = 1.0 / (beta * h)
    a3 = 1.0 / (2.0 * beta) - 1.0
    a6 = h * (1.0 - gamma)
    a7 = gamma * h

    Mop = _as_operator(M)
    Mm = M.matrix() if isinstance(M, LumpedMass) else M
    K_eff = K + a0 * sps.csr_matrix(Mm)
    solve = scaled_solver(K_eff, "Effective matrix")

    rec = _Recorder(K, M, monitor, record_every, snapshot_times, h)
    s = state0.copy()
    zero = np.zeros_like(s.d)
    rec(0, s, n == 0)
    start = time.perf_counter()
    for k in range(1, n + 1):
        t = state0.t + k * h
        F = load(t) if load is not None else zero
        d = solve(F + Mop(a0 * s.d + a2 * s.v + a3 * s.a))
        a = a0 * (d - s.d) - a2 * s.v - a3 * s.a
        v = s.v + a6 * s.a + a7 * a
        s = DynState(t, d, v, a)
        rec(k, s, k == n)
    wall = time.perf_counter() - start
    log(
        f"Newmark: {n} steps of {h:.4e} s in {wall:.2f} s",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return RunResult(rec.frame(), rec.snapshots, s, h, n, wall, "newmark")


# ============================================================================
# Errors
# ============================================================================


def error_norms(
    disc: ShellDiscretization,
    coefficients: np.ndarray,
    exact: ExactCallable,
    *,
    lattice: int = LATTICE,
) -> ErrorNorms:
    """Errors of a discrete solution against exact ambient fields.

    Args:
        disc: Discretization of the solution.
        coefficients: Full coefficient vector (all system DOFs).
        exact: ``exact(frame, xi) -> (u (n, 3), theta_amb (n, 3))``.
        lattice: Samples per direction and element for the maximum norm.

    Returns:
        L2 norms over S (sqrt(a) weighted, same quadrature as assembly) and maxima
        over a lattice of every active element restricted to S.
    """
    sq_u = sq_t = 0.0
    max_u = max_t = 0.0
    s = np.linspace(0.0, 1.0, lattice)
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    unit = np.stack([S1.ravel(), S2.ravel()], axis=-1)
    for d in disc.element_data():
        f = disc.fields_from_coefficients(coefficients, d.dofs, d.values, d.grads)
        u_ex, t_ex = exact(d.frame, d.points)
        t_h = np.einsum("nkg,ng->nk", d.frame.Qmat, f["theta"])
        sq_u += float(np.sum(d.jw * np.sum((f["u"] - u_ex) ** 2, axis=1)))
        sq_t += float(np.sum(d.jw * np.sum((t_h - t_ex) ** 2, axis=1)))

        x0, y0, x1, y1 = disc.mesh.grid.element_box(d.element)
        pts = np.array([x0, y0]) + unit * np.array([x1 - x0, y1 - y0])
        pts = pts[disc.mesh.region.contains(pts)]
        if pts.shape[0] == 0:
            continue
        dofs, values, grads = disc.basis(d.element, pts, 1)
        g = disc.fields_from_coefficients(coefficients, dofs, values, grads)
        frame = frame_at(disc.chart, pts)
        u_ex, t_ex = exact(frame, pts)
        t_h = np.einsum("nkg,ng->nk", frame.Qmat, g["theta"])
        max_u = max(max_u, float(np.max(np.linalg.norm(g["u"] - u_ex, axis=1))))
        max_t = max(max_t, float(np.max(np.linalg.norm(t_h - t_ex, axis=1))))
    return ErrorNorms(math.sqrt(sq_u), max_u, math.sqrt(sq_t), max_t)
