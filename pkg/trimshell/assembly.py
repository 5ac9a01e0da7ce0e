"""
Assembly of the semi-discrete Reissner-Mindlin shell system.

Unknowns are five scalar spline fields: the Cartesian displacement components
u_1, u_2, u_3 and the covariant rotation components theta_1, theta_2. DOFs are
sorted field-major: DOF ``f * m + c`` is coefficient c of field f, where c runs
over the system functions (active, not deactivated) in ascending global order.

The mass matrix is block diagonal, M = M_u (x3) + M_theta, with

    (M_u)_ij = int rho_u B_i B_j sqrt(a),
    (M_theta^{ab})_ij = int rho_theta B_i B_j a^{ab} sqrt(a),

and the stiffness matrix realizes the membrane, bending and shear energies.
Small cut elements of a stabilized space use the polynomial pieces of their large
neighbor; everything else is plain Galerkin assembly with full quadrature.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps
import shapely

from .errors import ConfigurationError, DomainError
from .geometry import SurfaceChart, SurfaceFrame, frame_at
from .logs import log
from .manufactured import ExactFields, ManufacturedSolution, TimeProfile
from .spectrum import scaled_solver
from .splines import TensorSplineSpace, active_functions, tensor_basis
from .stabilization import ExtensionMap, extended_basis_eval
from .trimming import Element, TrimmedMesh, gauss_rule_01

logger = logging.getLogger(__name__)

N_FIELDS = 5
FIELD_NAMES = ("u1", "u2", "u3", "theta1", "theta2")
ALL_FIELDS = tuple(range(N_FIELDS))
SHEAR_CORRECTION = 5.0 / 6.0

# Voigt pairs and their multiplicities in the full double contraction
_VOIGT = ((0, 0), (1, 1), (0, 1))
_VOIGT_MULT = np.array([1.0, 1.0, 2.0])

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True)
class MaterialParams:
    """
    Isotropic homogeneous shell material.

    Attributes:
        E: Young modulus (Pa).
        nu: Poisson ratio.
        rho: Density (kg/m^3).
        tau: Thickness (m).
        alpha_s: Shear correction factor.
    """

    E: float = 1.0
    nu: float = 0.25
    rho: float = 1.0
    tau: float = 0.05
    alpha_s: float = SHEAR_CORRECTION

    def __post_init__(self):
        if self.E <= 0:
            raise DomainError(f"Young modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise DomainError(f"Poisson ratio must lie in (-1, 0.5), got {self.nu}")
        if self.rho <= 0:
            raise DomainError(f"Density must be positive, got {self.rho}")
        if self.tau <= 0:
            raise DomainError(f"Thickness must be positive, got {self.tau}")

    @property
    def lam(self) -> float:
        return self.E * self.nu / (1.0 - self.nu**2)

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def rho_u(self) -> float:
        return self.tau * self.rho

    @property
    def rho_theta(self) -> float:
        return self.tau**3 * self.rho / 12.0


@dataclass(frozen=True, eq=False)
class GeneralizedStrains:
    """
    Membrane, bending, shear and higher-order strains at points.

    Attributes:
        membrane: epsilon_{alpha beta}, shape (..., 2, 2).
        bending: kappa_{alpha beta}, shape (..., 2, 2).
        shear: gamma_alpha, shape (..., 2).
        high_order: chi_{alpha beta}, shape (..., 2, 2); never enters the energy.
    """

    membrane: np.ndarray
    bending: np.ndarray
    shear: np.ndarray
    high_order: np.ndarray


@dataclass(frozen=True, eq=False)
class GeneralizedStresses:
    """N^{alpha beta}, M^{alpha beta} and Q^alpha at points."""

    N: np.ndarray
    M: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class StrainOperators:
    """
    Linear maps from local DOF values (5, nb) to generalized strains.

    Attributes:
        membrane: shape (n, 2, 2, 5, nb).
        bending: shape (n, 2, 2, 5, nb).
        shear: shape (n, 2, 5, nb).
        high_order: shape (n, 2, 2, 5, nb).
    """

    membrane: np.ndarray
    bending: np.ndarray
    shear: np.ndarray
    high_order: np.ndarray

    def apply(self, coefficients: np.ndarray) -> GeneralizedStrains:
        c = np.asarray(coefficients, dtype=float)
        return GeneralizedStrains(
            membrane=np.einsum("nabfj,fj->nab", self.membrane, c),
            bending=np.einsum("nabfj,fj->nab", self.bending, c),
            shear=np.einsum("nafj,fj->na", self.shear, c),
            high_order=np.einsum("nabfj,fj->nab", self.high_order, c),
        )


@dataclass(eq=False)
class ElementData:
    """Quadrature, basis and frame data of one active element."""

    element: Element
    points: np.ndarray
    weights: np.ndarray
    dofs: np.ndarray
    local: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    frame: SurfaceFrame

    @property
    def jw(self) -> np.ndarray:
        return self.weights * self.frame.sqrt_a


@dataclass
class LoadData:
    """
    Load functional data.

    Mode (a), prescribed data: ``body(x, frame) -> (f, m)`` gives the spatial
    amplitudes of external forces and moments at points, ``traction(x, frame, r)
    -> (h, n)`` those of boundary tractions on ``neumann`` boundary parts (grid
    side names, "holes" or "all"). Both are multiplied by ``profile(t)``.

    Mode (b), manufactured data: ``exact`` gives the exact solution and the load is
    b(u_ddot, v) + a(u, v).
    """

    profile: Optional[TimeProfile] = None
    body: Optional[Callable] = None
    traction: Optional[Callable] = None
    neumann: Tuple[str, ...] = ()
    exact: Optional[ManufacturedSolution] = None

    @property
    def is_manufactured(self) -> bool:
        return self.exact is not None

    def time_factor(self, t: float, order: int = 0) -> float:
        if self.exact is not None:
            return self.exact.phi(t, order)
        if self.profile is None:
            return 1.0 if order == 0 else 0.0
        return self.profile(t, order)


# ============================================================================
# Constitutive law and strains
# ============================================================================


def elasticity_tensor(a_con: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """E^{abcd} = 2 lam mu / (lam + 2 mu) a^{ab} a^{cd} + mu (a^{ac} a^{bd} + a^{ad} a^{bc})."""
    c = 2.0 * lam * mu / (lam + 2.0 * mu)
    return (
        c * np.einsum("...ab,...cd->...abcd", a_con, a_con)
        + mu * np.einsum("...ac,...bd->...abcd", a_con, a_con)
        + mu * np.einsum("...ad,...bc->...abcd", a_con, a_con)
    )


def shell_elasticity(frame: SurfaceFrame, mat: MaterialParams) -> np.ndarray:
    """Contravariant shell elasticity tensor at the frame points, shape (..., 2, 2, 2, 2)."""
    return elasticity_tensor(frame.a_con, mat.lam, mat.mu)


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def generalized_strains(
    frame: SurfaceFrame, du: np.ndarray, theta: np.ndarray, dtheta: np.ndarray
) -> GeneralizedStrains:
    """Generalized strains of fields at frame points.

    Args:
        frame: Frame at the points.
        du: u_{,alpha}, shape (..., 3, 2).
        theta: Covariant rotation components theta_alpha, shape (..., 2).
        dtheta: theta_{alpha,beta}, shape (..., 2, 2).
    """
    theta_amb = np.einsum("...kg,...g->...k", frame.Qmat, theta)
    dtheta_amb = np.einsum("...kg,...gb->...kb", frame.Qmat, dtheta) + np.einsum(
        "...kgb,...g->...kb", frame.d_con, theta
    )
    membrane = _sym(np.einsum("...ka,...kb->...ab", frame.cov, du))
    bending = (
        _sym(dtheta)
        - np.einsum("...kab,...k->...ab", frame.d_cov, theta_amb)
        + _sym(np.einsum("...ka,...kb->...ab", frame.dA3, du))
    )
    shear = np.einsum("...k,...ka->...a", frame.a3, du) + theta
    high = _sym(np.einsum("...ka,...kb->...ab", frame.dA3, dtheta_amb))
    return GeneralizedStrains(membrane, bending, shear, high)


def generalized_stresses(
    frame: SurfaceFrame, strains: GeneralizedStrains, mat: MaterialParams
) -> GeneralizedStresses:
    E = shell_elasticity(frame, mat)
    N = mat.tau * np.einsum("...abcd,...cd->...ab", E, strains.membrane)
    M = mat.tau**3 / 12.0 * np.einsum("...abcd,...cd->...ab", E, strains.bending)
    Q = mat.mu * mat.alpha_s * mat.tau * np.einsum("...ab,...b->...a", frame.a_con, strains.shear)
    return GeneralizedStresses(N, M, Q)


def strain_operators_at(
    frame: SurfaceFrame, values: np.ndarray, grads: np.ndarray
) -> StrainOperators:
    """Strain operators of the local basis at n points.

    Args:
        frame: Frame at the n points.
        values: Basis values (n, nb).
        grads: Basis gradients (n, nb, 2).
    """
    n, nb = values.shape
    membrane = np.zeros((n, 2, 2, N_FIELDS, nb))
    bending = np.zeros_like(membrane)
    high = np.zeros_like(membrane)
    shear = np.zeros((n, 2, N_FIELDS, nb))

    G = np.einsum("nka,njb->nabkj", frame.cov, grads)
    membrane[:, :, :, :3] = 0.5 * (G + np.swapaxes(G, 1, 2))
    H = np.einsum("nka,njb->nabkj", frame.dA3, grads)
    bending[:, :, :, :3] = 0.5 * (H + np.swapaxes(H, 1, 2))
    shear[:, :, :3] = np.einsum("nk,nja->nakj", frame.a3, grads)

    # a_{alpha,beta} . a^gamma
    S = np.einsum("nkab,nkg->nabg", frame.d_cov, frame.Qmat)
    eye = np.eye(2)
    for g in range(2):
        T = np.einsum("a,njb->nabj", eye[g], grads)
        bending[:, :, :, 3 + g] = 0.5 * (T + np.swapaxes(T, 1, 2)) - S[:, :, :, g, None] * values[
            :, None, None, :
        ]
        shear[:, :, 3 + g] = eye[g][None, :, None] * values[:, None, :]
        X = np.einsum("nka,nk,njb->nabj", frame.dA3, frame.Qmat[:, :, g], grads) + np.einsum(
            "nka,nkb,nj->nabj", frame.dA3, frame.d_con[:, :, g, :], values
        )
        high[:, :, :, 3 + g] = 0.5 * (X + np.swapaxes(X, 1, 2))
    return StrainOperators(membrane, bending, shear, high)


def _voigt_operator(op: np.ndarray) -> np.ndarray:
    """(n, 2, 2, 5, nb) -> (n, 3, 5 * nb) with engineering shear row."""
    n = op.shape[0]
    rows = np.stack([_VOIGT_MULT[i] * op[:, a, b] for i, (a, b) in enumerate(_VOIGT)], axis=1)
    return rows.reshape(n, 3, -1)


def _voigt_tensor(E: np.ndarray) -> np.ndarray:
    n = E.shape[0]
    D = np.empty((n, 3, 3))
    for i, (a, b) in enumerate(_VOIGT):
        for j, (c, d) in enumerate(_VOIGT):
            D[:, i, j] = E[:, a, b, c, d]
    return D


def _voigt_vector(T: np.ndarray) -> np.ndarray:
    return np.stack([T[..., a, b] for a, b in _VOIGT], axis=-1)


# ============================================================================
# Discretization
# ============================================================================


class ShellDiscretization:
    """
    Trimmed (optionally stabilized) spline discretization of a shell chart.

    Holds the system function numbering and per-element quadrature, basis and
    frame data shared by all assembly and post-processing routines.

    Args:
        mesh: Classified trimmed mesh.
        space: Spline space on the mesh grid.
        chart: Mid-surface chart.
        extension: Extension map for a stabilized space (None: plain space).
        quad_order: Gauss points per direction (default max degree + 1).
        verbose: Print progress.
    """

    def __init__(
        self,
        mesh: TrimmedMesh,
        space: TensorSplineSpace,
        chart: SurfaceChart,
        extension: Optional[ExtensionMap] = None,
        *,
        quad_order: Optional[int] = None,
        verbose: bool = False,
    ):
        if space.n_elements != tuple(mesh.grid.n):
            raise DomainError("Spline space and trimmed mesh use different grids")
        self.mesh = mesh
        self.space = space
        self.chart = chart
        self.extension = extension if extension is not None and not extension.is_identity else None
        self.quad_order = int(quad_order or max(space.degrees) + 1)
        self.verbose = verbose

        active = set()
        for e in mesh.active_elements:
            active.update(active_functions(space, e).tolist())
        if self.extension is not None:
            active -= set(self.extension.deactivated_dofs.tolist())
        self.functions = np.array(sorted(active), dtype=int)
        self.compact = np.full(space.dim, -1, dtype=int)
        self.compact[self.functions] = np.arange(self.functions.size)
        self._elements: Optional[List[ElementData]] = None

    @property
    def m(self) -> int:
        return int(self.functions.size)

    @property
    def n_dof(self) -> int:
        return N_FIELDS * self.m

    @property
    def stabilized(self) -> bool:
        return self.extension is not None

    def basis(
        self, element: Element, points: np.ndarray, order: int = 1
    ) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """(dofs, values, grads) of the basis used on ``element`` at points."""
        if self.extension is not None and self.extension.is_small(element):
            return extended_basis_eval(self.extension, element, points, order)
        dofs, values, grads, _ = tensor_basis(self.space, element, points, order)
        return dofs, values, grads

    def element_data(self) -> List[ElementData]:
        """Per-element data of all active elements, lexicographic order (cached)."""
        if self._elements is None:
            data = []
            for e in self.mesh.active_elements:
                pts, wts = self.mesh.element_rule(e, self.quad_order)
                if wts.size == 0:
                    continue
                dofs, values, grads = self.basis(e, pts, 1)
                local = self.compact[dofs]
                if np.any(local < 0):
                    raise DomainError(f"Element {e} uses functions outside the system")
                data.append(
                    ElementData(e, pts, wts, dofs, local, values, grads, frame_at(self.chart, pts))
                )
            self._elements = data
            log(
                f"Prepared {len(data)} elements, {self.m} functions per field",
                "INFO",
                verbose=self.verbose,
                logger=logger,
            )
        return self._elements

    def dof_index(self, field_index: int, local: np.ndarray) -> np.ndarray:
        return field_index * self.m + np.asarray(local)

    def element_dofs(self, data: ElementData) -> np.ndarray:
        """System DOFs of an element's local vector, field-major."""
        return np.concatenate([self.dof_index(f, data.local) for f in range(N_FIELDS)])

    def locate_active(self, points: np.ndarray) -> List[Optional[Element]]:
        """Active element containing each point (None if there is none).

        Points on grid lines may belong to several elements; the first active one
        among the candidates is returned.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        grid = self.mesh.grid
        t = (pts - np.asarray(grid.lo)) / np.asarray(grid.h)
        upper = np.floor(t).astype(int)
        lower = np.ceil(t).astype(int) - 1
        n = np.asarray(grid.n)
        out: List[Optional[Element]] = []
        for k in range(pts.shape[0]):
            found = None
            for i in sorted({upper[k, 0], lower[k, 0]}):
                for j in sorted({upper[k, 1], lower[k, 1]}):
                    if 0 <= i < n[0] and 0 <= j < n[1] and self.mesh.is_active((i, j)):
                        found = (int(i), int(j))
                        break
                if found is not None:
                    break
            out.append(found)
        return out

    def local_coefficients(self, coefficients: np.ndarray, dofs: np.ndarray) -> np.ndarray:
        """Coefficients (5, nb) of the given global functions."""
        C = np.asarray(coefficients, dtype=float).reshape(N_FIELDS, self.m)
        return C[:, self.compact[dofs]]

    def fields_from_coefficients(
        self, coefficients: np.ndarray, dofs: np.ndarray, values: np.ndarray, grads: np.ndarray
    ) -> Dict[str, np.ndarray]:
        """Discrete u, theta (covariant), du and dtheta at points of one element."""
        c = self.local_coefficients(coefficients, dofs)
        return {
            "u": values @ c[:3].T,
            "theta": values @ c[3:].T,
            "du": np.einsum("njb,kj->nkb", grads, c[:3]),
            "dtheta": np.einsum("njb,gj->ngb", grads, c[3:]),
        }

    def evaluate(
        self, coefficients: np.ndarray, points: np.ndarray, *, derivatives: bool = False
    ) -> Dict[str, np.ndarray]:
        """Evaluate the discrete fields at arbitrary parametric points.

        Points outside S, or in no active element, get NaN.

        Returns:
            Dict with "u" (n, 3), "theta_amb" (n, 3), "theta" (n, 2) and, with
            ``derivatives``, "du" (n, 3, 2) and "dtheta" (n, 2, 2).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = pts.shape[0]
        out = {
            "u": np.full((n, 3), np.nan),
            "theta": np.full((n, 2), np.nan),
            "theta_amb": np.full((n, 3), np.nan),
        }
        if derivatives:
            out["du"] = np.full((n, 3, 2), np.nan)
            out["dtheta"] = np.full((n, 2, 2), np.nan)
        inside = self.mesh.region.contains(pts)
        owners = self.locate_active(pts)
        groups: Dict[Element, List[int]] = {}
        for k, e in enumerate(owners):
            if e is not None and inside[k]:
                groups.setdefault(e, []).append(k)
        for e, idx in sorted(groups.items()):
            sel = np.array(idx)
            dofs, values, grads = self.basis(e, pts[sel], 1)
            f = self.fields_from_coefficients(coefficients, dofs, values, grads)
            frame = frame_at(self.chart, pts[sel])
            out["u"][sel] = f["u"]
            out["theta"][sel] = f["theta"]
            out["theta_amb"][sel] = np.einsum("nkg,ng->nk", frame.Qmat, f["theta"])
            if derivatives:
                out["du"][sel] = f["du"]
                out["dtheta"][sel] = f["dtheta"]
        return out


def stresses_at(
    disc: ShellDiscretization,
    mat: MaterialParams,
    coefficients: np.ndarray,
    points: np.ndarray,
) -> GeneralizedStresses:
    """Generalized stresses of a discrete solution at parametric points (NaN outside S)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    f = disc.evaluate(coefficients, pts, derivatives=True)
    ok = np.all(np.isfinite(f["u"]), axis=1)
    N = np.full((pts.shape[0], 2, 2), np.nan)
    M = np.full_like(N, np.nan)
    Q = np.full((pts.shape[0], 2), np.nan)
    if np.any(ok):
        frame = frame_at(disc.chart, pts[ok])
        strains = generalized_strains(frame, f["du"][ok], f["theta"][ok], f["dtheta"][ok])
        s = generalized_stresses(frame, strains, mat)
        N[ok], M[ok], Q[ok] = s.N, s.M, s.Q
    return GeneralizedStresses(N, M, Q)


# ============================================================================
# System matrices
# ============================================================================


@dataclass(eq=False)
class ShellSystem:
    """
    Assembled 5-field system.

    Attributes:
        disc: The discretization the system lives on.
        material: Material parameters.
        M_u: Scalar displacement mass block (m x m), shared by u1, u2, u3.
        M_theta: 2 x 2 nested list of rotation mass blocks M_theta^{ab}.
        K: Stiffness matrix (5m x 5m), symmetric.
    """

    disc: ShellDiscretization
    material: MaterialParams
    M_u: sps.csr_matrix
    M_theta: List[List[sps.csr_matrix]]
    K: sps.csr_matrix

    @property
    def n_dof(self) -> int:
        return self.disc.n_dof

    @property
    def mass(self) -> sps.csr_matrix:
        """Full block-diagonal mass matrix."""
        Z = None
        blocks = [
            [self.M_u, Z, Z, Z, Z],
            [Z, self.M_u, Z, Z, Z],
            [Z, Z, self.M_u, Z, Z],
            [Z, Z, Z, self.M_theta[0][0], self.M_theta[0][1]],
            [Z, Z, Z, self.M_theta[1][0], self.M_theta[1][1]],
        ]
        return sps.bmat(blocks, format="csr")


def _accumulate(
    rows: List[np.ndarray], cols: List[np.ndarray], vals: List[np.ndarray], shape: Tuple[int, int]
) -> sps.csr_matrix:
    if not vals:
        return sps.csr_matrix(shape)
    A = sps.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    ).tocsr()
    A.sum_duplicates()
    return A


def _scatter(idx: np.ndarray, local: np.ndarray):
    r = np.repeat(idx, idx.size)
    c = np.tile(idx, idx.size)
    return r, c, local.ravel()


def assemble_mass(disc: ShellDiscretization, mat: MaterialParams):
    """Mass blocks (M_u, M_theta) of the discretization."""
    m = disc.m
    ru, cu, vu = [], [], []
    rt = [[[] for _ in range(2)] for _ in range(2)]
    ct = [[[] for _ in range(2)] for _ in range(2)]
    vt = [[[] for _ in range(2)] for _ in range(2)]
    for d in disc.element_data():
        jw = d.jw
        Me = mat.rho_u * np.einsum("n,ni,nj->ij", jw, d.values, d.values)
        r, c, v = _scatter(d.local, Me)
        ru.append(r)
        cu.append(c)
        vu.append(v)
        Mt = mat.rho_theta * np.einsum("n,nab,ni,nj->abij", jw, d.frame.a_con, d.values, d.values)
        for a in range(2):
            for b in range(2):
                r, c, v = _scatter(d.local, Mt[a, b])
                rt[a][b].append(r)
                ct[a][b].append(c)
                vt[a][b].append(v)
    M_u = _accumulate(ru, cu, vu, (m, m))
    M_u = 0.5 * (M_u + M_u.T)
    M_theta = [
        [_accumulate(rt[a][b], ct[a][b], vt[a][b], (m, m)) for b in range(2)] for a in range(2)
    ]
    M_theta[0][0] = 0.5 * (M_theta[0][0] + M_theta[0][0].T)
    M_theta[1][1] = 0.5 * (M_theta[1][1] + M_theta[1][1].T)
    off = 0.5 * (M_theta[0][1] + M_theta[1][0].T)
    M_theta[0][1] = off.tocsr()
    M_theta[1][0] = off.T.tocsr()
    return M_u.tocsr(), [[M.tocsr() for M in row] for row in M_theta]


def element_stiffness(data: ElementData, mat: MaterialParams) -> np.ndarray:
    """Local stiffness (5 nb x 5 nb) of one element."""
    ops = strain_operators_at(data.frame, data.values, data.grads)
    n = data.values.shape[0]
    Bm = _voigt_operator(ops.membrane)
    Bb = _voigt_operator(ops.bending)
    Bs = ops.shear.reshape(n, 2, -1)
    D = _voigt_tensor(shell_elasticity(data.frame, mat))
    jw = data.jw
    Ke = mat.tau * np.einsum("n,nia,nij,njb->ab", jw, Bm, D, Bm, optimize=True)
    Ke += mat.tau**3 / 12.0 * np.einsum("n,nia,nij,njb->ab", jw, Bb, D, Bb, optimize=True)
    Ke += (mat.mu * mat.alpha_s * mat.tau) * np.einsum(
        "n,nia,nij,njb->ab", jw, Bs, data.frame.a_con, Bs, optimize=True
    )
    return Ke


def assemble_stiffness(disc: ShellDiscretization, mat: MaterialParams) -> sps.csr_matrix:
    """Stiffness matrix of the membrane, bending and shear energies."""
    rows, cols, vals = [], [], []
    for d in disc.element_data():
        r, c, v = _scatter(disc.element_dofs(d), element_stiffness(d, mat))
        rows.append(r)
        cols.append(c)
        vals.append(v)
    K = _accumulate(rows, cols, vals, (disc.n_dof, disc.n_dof))
    return (0.5 * (K + K.T)).tocsr()


def assemble_system(
    disc: ShellDiscretization, mat: MaterialParams, *, verbose: bool = False
) -> ShellSystem:
    """Assemble mass blocks and stiffness of a discretization."""
    M_u, M_theta = assemble_mass(disc, mat)
    K = assemble_stiffness(disc, mat)
    log(
        f"Assembled {disc.n_dof} DOFs ({'stabilized' if disc.stabilized else 'plain'} space), "
        f"nnz(K) = {K.nnz}",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return ShellSystem(disc, mat, M_u, M_theta, K)


# ============================================================================
# Loads
# ============================================================================


def _inertia_vector(
    disc: ShellDiscretization,
    mat: MaterialParams,
    fields: Callable[[ElementData], Tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    """int rho_u u . v + rho_theta theta . phi over S for given ambient (u, theta)."""
    F = np.zeros(disc.n_dof)
    for d in disc.element_data():
        u, theta_amb = fields(d)
        Fu = mat.rho_u * np.einsum("n,nk,nj->kj", d.jw, u, d.values)
        Ft = mat.rho_theta * np.einsum("n,nk,nkg,nj->gj", d.jw, theta_amb, d.frame.Qmat, d.values)
        np.add.at(F, disc.element_dofs(d), np.concatenate([Fu, Ft]).ravel())
    return F


def _energy_vector(disc: ShellDiscretization, mat: MaterialParams, fields: Callable) -> np.ndarray:
    """a(u_ex, v) for the exact fields returned by ``fields(data) -> ExactFields``."""
    F = np.zeros(disc.n_dof)
    for d in disc.element_data():
        ex: ExactFields = fields(d)
        strains = generalized_strains(d.frame, ex.du, ex.theta, ex.dtheta)
        s = generalized_stresses(d.frame, strains, mat)
        ops = strain_operators_at(d.frame, d.values, d.grads)
        n = d.values.shape[0]
        Fe = np.einsum("n,ni,nia->a", d.jw, _voigt_vector(s.N), _voigt_operator(ops.membrane))
        Fe += np.einsum("n,ni,nia->a", d.jw, _voigt_vector(s.M), _voigt_operator(ops.bending))
        Fe += np.einsum("n,ni,nia->a", d.jw, s.Q, ops.shear.reshape(n, 2, -1))
        np.add.at(F, disc.element_dofs(d), Fe)
    return F


def neumann_segments(disc: ShellDiscretization, parts: Sequence[str]) -> np.ndarray:
    """Trim-polyline segments of the named boundary parts, shape (k, 2, 2)."""
    segs = []
    for name in parts:
        s = disc.mesh.region.boundary_segments(name)
        if s.shape[0] == 0:
            raise ConfigurationError(
                f"Neumann boundary '{name}' is not resolved by the trim polylines"
            )
        segs.append(s)
    return np.concatenate(segs, axis=0) if segs else np.zeros((0, 2, 2))


def _boundary_vector(disc: ShellDiscretization, data: LoadData) -> np.ndarray:
    """int over the Neumann boundary of h . v + n . phi (spatial amplitudes)."""
    F = np.zeros(disc.n_dof)
    segs = neumann_segments(disc, data.neumann)
    if segs.shape[0] == 0 or data.traction is None:
        return F
    s, w = gauss_rule_01(disc.quad_order)
    p0, p1 = segs[:, 0], segs[:, 1]
    pts = (p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]).reshape(-1, 2)
    tangent = np.repeat(p1 - p0, s.size, axis=0)
    wts = np.tile(w, segs.shape[0])

    owners = disc.locate_active(pts)
    groups: Dict[Element, List[int]] = {}
    for k, e in enumerate(owners):
        if e is None:
            raise ConfigurationError(f"Neumann point {pts[k]} lies in no active element")
        groups.setdefault(e, []).append(k)
    for e, idx in sorted(groups.items()):
        sel = np.array(idx)
        frame = frame_at(disc.chart, pts[sel])
        t_phys = np.einsum("nka,na->nk", frame.cov, tangent[sel])
        length = np.linalg.norm(t_phys, axis=1)
        r = np.cross(t_phys, frame.a3)
        r /= np.linalg.norm(r, axis=1)[:, None]
        h, n_mom = data.traction(frame.x, frame, r)
        dofs, values, _ = disc.basis(e, pts[sel], 0)
        jw = wts[sel] * length
        Fu = np.einsum("n,nk,nj->kj", jw, h, values)
        Ft = np.einsum("n,nk,nkg,nj->gj", jw, n_mom, frame.Qmat, values)
        local = disc.compact[dofs]
        idx_all = np.concatenate([disc.dof_index(f, local) for f in range(N_FIELDS)])
        np.add.at(F, idx_all, np.concatenate([Fu, Ft]).ravel())
    return F


@dataclass(eq=False)
class SeparableLoad:
    """
    Load vector F(t) = sum_k g_k(t) V_k with fixed spatial vectors.

    Attributes:
        vectors: Spatial vectors V_k (full DOF numbering).
        factors: Time functions g_k.
    """

    vectors: List[np.ndarray]
    factors: List[Callable[[float], float]]

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros_like(self.vectors[0]) if self.vectors else np.zeros(0)
        for V, g in zip(self.vectors, self.factors):
            out = out + g(t) * V
        return out


def load_components(
    disc: ShellDiscretization, mat: MaterialParams, data: LoadData
) -> SeparableLoad:
    """Spatial load vectors and their time factors.

    Manufactured data gives a(U, v) phi(t) + b(U, v) phi''(t); prescribed data gives
    (body + boundary) phi(t).
    """
    if data.is_manufactured:
        sol = data.exact
        cache: Dict[Element, ExactFields] = {}

        def spatial(d: ElementData) -> ExactFields:
            if d.element not in cache:
                cache[d.element] = sol.spatial_fields(d.frame, d.points)
            return cache[d.element]

        V_a = _energy_vector(disc, mat, spatial)
        V_b = _inertia_vector(disc, mat, lambda d: (spatial(d).u, spatial(d).theta_amb))
        return SeparableLoad([V_a, V_b], [lambda t: sol.phi(t, 0), lambda t: sol.phi(t, 2)])

    V = np.zeros(disc.n_dof)
    if data.body is not None:
        body = data.body

        def body_fields(d: ElementData):
            f, m_vec = body(d.frame.x, d.frame)
            # the moment tests against the rotation phi = a^gamma B_j; rho factors absorbed
            return f / mat.rho_u, m_vec / mat.rho_theta

        V = V + _inertia_vector(disc, mat, body_fields)
    V = V + _boundary_vector(disc, data)
    return SeparableLoad([V], [lambda t: data.time_factor(t, 0)])


def assemble_load(
    disc: ShellDiscretization, mat: MaterialParams, data: LoadData, t: float
) -> np.ndarray:
    """Load vector F(t) in the full DOF numbering."""
    return load_components(disc, mat, data)(t)


# ============================================================================
# Boundary conditions and initial data
# ============================================================================


@dataclass(eq=False)
class ConstrainedSystem:
    """
    System with homogeneous Dirichlet DOFs eliminated.

    Attributes:
        system: The full system.
        dirichlet_dofs: Eliminated DOFs, ascending.
        free_dofs: Remaining DOFs, ascending.
        K: Reduced stiffness.
        M: Reduced consistent mass.
        n_rigid_modes: Dimension of the stiffness null space (6 when free, else 0).
    """

    system: ShellSystem
    dirichlet_dofs: np.ndarray
    free_dofs: np.ndarray
    K: sps.csr_matrix
    M: sps.csr_matrix
    n_rigid_modes: int = 0

    @property
    def n_free(self) -> int:
        return int(self.free_dofs.size)

    def restrict(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(vector)[self.free_dofs]

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        full = np.zeros(self.system.n_dof)
        full[self.free_dofs] = reduced
        return full


def _edge_is_fitted(disc: ShellDiscretization, edge: str) -> bool:
    grid = disc.mesh.grid
    line = grid.edge_line(edge)
    scale = max(np.subtract(grid.hi, grid.lo))
    side = disc.mesh.region.boundary_segments(edge)
    if side.shape[0] == 0:
        return False
    return bool(np.all(line.distance(shapely.points(side.reshape(-1, 2))) <= 1e-10 * scale))


def edge_functions(space: TensorSplineSpace, edge: str) -> np.ndarray:
    """Global functions that do not vanish on a side of the grid box."""
    m1, m2 = space.shape
    if edge == "left":
        i1, i2 = np.zeros(m2, int), np.arange(m2)
    elif edge == "right":
        i1, i2 = np.full(m2, m1 - 1), np.arange(m2)
    elif edge == "bottom":
        i1, i2 = np.arange(m1), np.zeros(m1, int)
    elif edge == "top":
        i1, i2 = np.arange(m1), np.full(m1, m2 - 1)
    else:
        raise ConfigurationError(f"Unknown Dirichlet edge '{edge}'")
    return space.global_index(i1, i2)


def apply_dirichlet(
    system: ShellSystem, edges: Optional[Mapping[str, Sequence[int]]] = None
) -> ConstrainedSystem:
    """Eliminate homogeneous Dirichlet DOFs.

    Args:
        system: Assembled system.
        edges: Mapping grid-edge name -> constrained field indices (0..4).

    Raises:
        ConfigurationError: If a constrained edge is trimmed rather than fitted.
    """
    disc = system.disc
    edges = dict(edges or {})
    constrained = set()
    for edge, fields in edges.items():
        fields = tuple(fields)
        if not fields:
            continue
        if any(f not in ALL_FIELDS for f in fields):
            raise ConfigurationError(
                f"Invalid field index in Dirichlet conditions of '{edge}': {fields}"
            )
        functions = edge_functions(disc.space, edge)
        if not _edge_is_fitted(disc, edge):
            raise ConfigurationError(
                f"Dirichlet conditions on the trimmed edge '{edge}' are not supported"
            )
        local = disc.compact[functions]
        local = local[local >= 0]
        for f in fields:
            constrained.update(disc.dof_index(f, local).tolist())
    dirichlet = np.array(sorted(constrained), dtype=int)
    free = np.setdiff1d(np.arange(system.n_dof), dirichlet)
    K = system.K[free][:, free].tocsr()
    M = system.mass[free][:, free].tocsr()
    return ConstrainedSystem(system, dirichlet, free, K, M, 0 if dirichlet.size else 6)


def mass_solver(M: sps.spmatrix) -> Callable[[np.ndarray], np.ndarray]:
    """Sparse direct solver for a consistent mass matrix (Jacobi-scaled)."""
    return scaled_solver(M, "Mass matrix")


def project_initial(
    constrained: ConstrainedSystem,
    u0: Callable[[SurfaceFrame, np.ndarray], Tuple[np.ndarray, np.ndarray]],
    v0: Callable[[SurfaceFrame, np.ndarray], Tuple[np.ndarray, np.ndarray]],
) -> Tuple[np.ndarray, np.ndarray]:
    """Mass-weighted L2 projection of initial displacement and velocity.

    Args:
        constrained: System with Dirichlet DOFs removed.
        u0: ``u0(frame, xi) -> (u (n, 3), theta_amb (n, 3))``.
        v0: Same for the velocity.

    Returns:
        Reduced coefficient vectors (d0, v0).
    """
    disc = constrained.system.disc
    mat = constrained.system.material
    solve = mass_solver(constrained.M)
    out = []
    for fn in (u0, v0):
        rhs = _inertia_vector(disc, mat, lambda d, fn=fn: fn(d.frame, d.points))
        rhs = constrained.restrict(rhs)
        out.append(solve(rhs) if np.any(rhs) else np.zeros_like(rhs))
    return out[0], out[1]
