"""
Mass lumping, positivity check and generalized eigenvalue analysis.

Explicit schemes are stable for dt <= C / omega_max, where omega_max^2 is the
largest eigenvalue of K x = lambda M x. The routines here compute it for either a
consistent (sparse) or a row-sum lumped (diagonal) mass matrix, report the
smallest retained eigenvalues, and check the sufficient chart condition under
which the lumped rotational mass stays positive definite.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import DomainError, IndefiniteLumpedMassError, ModelValidityWarning, SolverError
from .geometry import SurfaceChart, frame_at
from .logs import log

logger = logging.getLogger(__name__)

MASS_KINDS = ("consistent", "lumped", "stabilized_consistent", "stabilized_lumped")
SCHEME_CONSTANTS = {"central_difference": 2.0, "newmark": math.inf}
DENSE_LIMIT = 2500
NULL_TOL = 1e-8
LOW_SHIFT = 1e-6

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True, eq=False)
class LumpedMass:
    """
    Diagonal row-sum mass.

    Attributes:
        diag: Positive diagonal entries.
        provenance: "plain" or "stabilized".
    """

    diag: np.ndarray
    provenance: str = "plain"

    @property
    def n(self) -> int:
        return int(self.diag.size)

    def matrix(self) -> sps.dia_matrix:
        return sps.diags(self.diag)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return rhs / self.diag

    def restrict(self, dofs: np.ndarray) -> "LumpedMass":
        return LumpedMass(self.diag[np.asarray(dofs)], self.provenance)


MassLike = Union[LumpedMass, sps.spmatrix, np.ndarray]


@dataclass(frozen=True)
class SpectrumReport:
    """
    Spectral summary of one (K, M) pencil.

    Attributes:
        mass_kind: One of MASS_KINDS.
        omega_max_sq: Largest generalized eigenvalue.
        min_eigs: Smallest retained eigenvalues, ascending.
        dt_crit: Critical step of ``scheme``.
        scheme: Time scheme whose constant defines dt_crit.
    """

    mass_kind: str
    omega_max_sq: float
    min_eigs: Tuple[float, ...] = field(default_factory=tuple)
    dt_crit: float = math.inf
    scheme: str = "central_difference"

    def as_row(self, k: Optional[int] = None) -> dict:
        """Flat mapping used for CSV tables (``min_eig_1`` ... ``min_eig_k``)."""
        k = len(self.min_eigs) if k is None else k
        row = {
            "mass_kind": self.mass_kind,
            "omega_max_sq": self.omega_max_sq,
            "dt_crit": self.dt_crit,
        }
        for i in range(k):
            row[f"min_eig_{i + 1}"] = self.min_eigs[i] if i < len(self.min_eigs) else math.nan
        return row


# ============================================================================
# Lumping and positivity
# ============================================================================


def row_sum_lump(M: Union[sps.spmatrix, np.ndarray], provenance: str = "plain") -> LumpedMass:
    """Row-sum lumping d_i = sum_j m_ij.

    Raises:
        IndefiniteLumpedMassError: If some row sum is not strictly positive.
    """
    d = np.asarray(M.sum(axis=1)).ravel().astype(float)
    bad = np.nonzero(d <= 0.0)[0]
    if bad.size:
        i = int(bad[np.argmin(d[bad])])
        raise IndefiniteLumpedMassError(
            f"Lumped mass is not positive at DOF {i} (row sum {d[i]:.3e}, "
            f"{bad.size} nonpositive entries)",
            dof=i,
            value=float(d[i]),
        )
    return LumpedMass(d, provenance)


def check_pd_condition(chart: SurfaceChart, samples: int = 9) -> Tuple[bool, float]:
    """Sufficient condition for a positive definite lumped rotational mass.

    The margin is min over sample points of min|a_i| / max|a_i| - cos(a_1, a_2);
    the condition holds when it is positive.
    """
    frame = frame_at(chart, chart.sample_points(samples))
    n1 = np.linalg.norm(frame.a1, axis=-1)
    n2 = np.linalg.norm(frame.a2, axis=-1)
    cos = np.einsum("nk,nk->n", frame.a1, frame.a2) / (n1 * n2)
    margin = float(np.min(np.minimum(n1, n2) / np.maximum(n1, n2) - cos))
    return margin > 0.0, margin


# ============================================================================
# Scaled solves
# ============================================================================


def jacobi_scaling(A: MassLike) -> np.ndarray:
    """Scale vector s = diag(A)^(-1/2), so that s A s has a unit diagonal.

    Functions that only live on small cut slivers have mass diagonals many orders
    of magnitude below the rest.

    Raises:
        SolverError: If a diagonal entry is not strictly positive.
    """
    d = A.diag if isinstance(A, LumpedMass) else np.asarray(sps.csr_matrix(A).diagonal(), float)
    bad = np.nonzero(~(d > 0.0))[0]
    if bad.size:
        raise SolverError(
            f"Matrix has a nonpositive diagonal entry at DOF {int(bad[0])} ({d[bad[0]]:.3e})"
        )
    return 1.0 / np.sqrt(d)


def scaled_solver(
    A: Union[sps.spmatrix, np.ndarray], label: str = "Mass matrix"
) -> Callable[[np.ndarray], np.ndarray]:
    """Sparse LU solver of A x = b that factors s A s instead of A.

    Raises:
        SolverError: If the scaled matrix cannot be factorized.
    """
    s = jacobi_scaling(A)
    S = sps.diags(s)
    try:
        lu = spla.splu(sps.csc_matrix(S @ sps.csr_matrix(A) @ S))
    except RuntimeError as exc:
        raise SolverError(f"{label} factorization failed: {exc}") from exc

    def solve(rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        w = s if rhs.ndim == 1 else s[:, None]
        return w * lu.solve(w * rhs)

    return solve


# ============================================================================
# Eigenvalues
# ============================================================================


def _dense(A) -> np.ndarray:
    return A.toarray() if sps.issparse(A) else np.asarray(A, dtype=float)


def _scaled_pencil(K, M: MassLike) -> Tuple[np.ndarray, np.ndarray]:
    """Dense s K s and s M s with the Jacobi scaling of M."""
    s = jacobi_scaling(M)
    Kd = s[:, None] * _dense(K) * s[None, :]
    if isinstance(M, LumpedMass):
        return Kd, np.eye(M.n)
    return Kd, s[:, None] * _dense(M) * s[None, :]


def _low_shift(diag: np.ndarray) -> float:
    # Diagonal of the scaled stiffness: Rayleigh quotients of single basis functions.
    diag = np.abs(diag)
    scale = float(np.median(diag)) if diag.size else 0.0
    if scale <= 0.0:
        scale = float(diag.max()) if diag.size and diag.max() > 0.0 else 1.0
    return LOW_SHIFT * scale


def _rayleigh(Ks, Ms, X: np.ndarray) -> np.ndarray:
    num = np.einsum("ij,ij->j", X, Ks @ X)
    den = np.einsum("ij,ij->j", X, Ms @ X)
    return np.sort(num / den)


def _power_iteration(
    K: sps.spmatrix,
    M: MassLike,
    tol: float,
    seed: Optional[int],
    maxiter: int,
) -> float:
    n = K.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    if isinstance(M, LumpedMass):
        solve = M.solve
        Mx = lambda v: M.diag * v  # noqa: E731
    else:
        Ms = sps.csr_matrix(M)
        jacobi = sps.diags(jacobi_scaling(Ms) ** 2)

        def solve(rhs: np.ndarray) -> np.ndarray:
            y, info = spla.cg(Ms, rhs, rtol=1e-10, atol=0.0, maxiter=10 * n, M=jacobi)
            if info != 0:
                raise SolverError(f"Conjugate gradient did not converge (info = {info})")
            return y

        Mx = Ms.dot

    lam = 0.0
    for it in range(maxiter):
        y = solve(K @ x)
        x = y / math.sqrt(max(float(y @ Mx(y)), 1e-300))
        new = float(x @ (K @ x))
        if it > 0 and abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    warnings.warn(
        f"Power iteration did not reach tol {tol:g} in {maxiter} iterations",
        ModelValidityWarning,
        stacklevel=3,
    )
    return lam


def max_generalized_eig(
    K: Union[sps.spmatrix, np.ndarray],
    M: MassLike,
    tol: float = 1e-8,
    *,
    method: str = "auto",
    seed: Optional[int] = 0,
    maxiter: int = 100000,
) -> float:
    """Largest eigenvalue omega_max^2 of K x = lambda M x.

    Args:
        K: Symmetric positive semidefinite stiffness.
        M: Consistent mass (sparse or dense) or LumpedMass.
        tol: Relative tolerance of the power iteration.
        method: "power", "dense", "lanczos" or "auto" (dense up to DENSE_LIMIT
            unknowns, Lanczos above).
        seed: Start vector seed of the power iteration.
        maxiter: Power iteration cap.

    Raises:
        SolverError: If an inner conjugate gradient solve fails.
    """
    n = K.shape[0]
    if n == 0:
        raise DomainError("Empty system has no eigenvalues")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "power":
        return _power_iteration(sps.csr_matrix(K), M, tol, seed, maxiter)
    if method == "dense":
        return float(generalized_eigvals(K, M)[-1])
    if method == "lanczos":
        s = sps.diags(jacobi_scaling(M))
        Mm = sps.identity(n) if isinstance(M, LumpedMass) else s @ sps.csr_matrix(M) @ s
        try:
            vals = spla.eigsh(
                sps.csr_matrix(s @ sps.csr_matrix(K) @ s),
                k=1,
                M=sps.csc_matrix(Mm),
                which="LA",
                tol=tol,
                return_eigenvectors=False,
            )
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"Lanczos iteration did not converge: {exc}") from exc
        return float(vals[-1])
    raise DomainError(f"Unknown eigenvalue method '{method}'")


def generalized_eigvals(K, M: MassLike) -> np.ndarray:
    """All eigenvalues of the pencil, ascending (dense solver on the scaled pencil)."""
    Ks, Ms = _scaled_pencil(K, M)
    if isinstance(M, LumpedMass):
        return sla.eigvalsh(Ks)
    try:
        return sla.eigh(Ks, Ms, eigvals_only=True)
    except sla.LinAlgError:
        vals = sla.eig(Ks, Ms, right=False)
        return np.sort(vals.real)


def min_generalized_eigs(
    K,
    M: MassLike,
    k: int = 1,
    *,
    max_null: int = 0,
    null_tol: float = NULL_TOL,
    omega_max_sq: Optional[float] = None,
) -> np.ndarray:
    """The k smallest retained eigenvalues of the pencil.

    The low end is taken from the largest eigenvalues mu of the inverse pencil
    M x = mu (K + sigma M) x on the Jacobi-scaled matrices, with a small positive
    shift sigma, and each value is refined by its Rayleigh quotient.

    Eigenvalues below ``null_tol * omega_max_sq`` are numerical null space (rigid
    modes); at most ``max_null`` of them are dropped, so spurious near-zero modes
    beyond the rigid ones stay visible.

    Raises:
        SolverError: If the shifted stiffness is not positive definite.
    """
    n = K.shape[0]
    m = min(k + max_null, n)
    if m <= 0:
        return np.empty(0)
    top = max_generalized_eig(K, M) if omega_max_sq is None else omega_max_sq
    try:
        if n <= DENSE_LIMIT:
            Ks, Ms = _scaled_pencil(K, M)
            sigma = _low_shift(np.diag(Ks))
            _, X = sla.eigh(Ms, Ks + sigma * Ms, subset_by_index=[n - m, n - 1])
        else:
            s = sps.diags(jacobi_scaling(M))
            Ks = sps.csc_matrix(s @ sps.csr_matrix(K) @ s)
            Mm = sps.identity(n) if isinstance(M, LumpedMass) else s @ sps.csr_matrix(M) @ s
            Ms = sps.csc_matrix(Mm)
            sigma = _low_shift(Ks.diagonal())
            _, X = spla.eigsh(Ks, k=min(m, n - 1), M=Ms, sigma=-sigma, which="LM")
    except (sla.LinAlgError, spla.ArpackNoConvergence) as exc:
        raise SolverError(f"Low-end eigen solve failed: {exc}") from exc
    vals = _rayleigh(Ks, Ms, X)
    n_null = int(min(max_null, np.sum(vals < null_tol * top)))
    return np.asarray(vals[n_null : n_null + k], dtype=float)


def critical_dt(omega_max_sq: float, scheme: str = "central_difference") -> float:
    """dt_c = C / omega_max (infinite for the average-acceleration scheme)."""
    if scheme not in SCHEME_CONSTANTS:
        raise DomainError(
            f"Unknown time scheme '{scheme}', expected one of {tuple(SCHEME_CONSTANTS)}"
        )
    if omega_max_sq <= 0:
        raise DomainError(f"omega_max^2 must be positive, got {omega_max_sq}")
    return SCHEME_CONSTANTS[scheme] / math.sqrt(omega_max_sq)


def spectrum_report(
    K,
    M: MassLike,
    mass_kind: str,
    *,
    k: int = 1,
    max_null: int = 0,
    scheme: str = "central_difference",
    method: str = "auto",
    verbose: bool = False,
) -> SpectrumReport:
    """Largest eigenvalue, critical step and k smallest retained eigenvalues."""
    if mass_kind not in MASS_KINDS:
        raise DomainError(f"Unknown mass kind '{mass_kind}'")
    top = max_generalized_eig(K, M, method=method)
    low = min_generalized_eigs(K, M, k, max_null=max_null, omega_max_sq=top) if k > 0 else ()
    report = SpectrumReport(
        mass_kind=mass_kind,
        omega_max_sq=top,
        min_eigs=tuple(float(v) for v in low),
        dt_crit=critical_dt(top, scheme),
        scheme=scheme,
    )
    log(
        f"{mass_kind}: omega_max^2 = {top:.6e}, dt_c = {report.dt_crit:.6e}",
        "INFO",
        verbose=verbose,
        logger=logger,
    )
    return report
