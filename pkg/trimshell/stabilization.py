"""
Polynomial-extension stabilization of small cut elements.

On a small element T (fraction < gamma) the restrictions of the basis functions
are discarded. Instead, the polynomial pieces of the functions active on a large,
face-adjacent neighbor T' are extended onto T. Assembly then treats T as if it
carried the index set of T', which yields a generally non-conforming space whose
sparsity pattern is contained in the original one.

Functions whose support meets S only through small elements end up in no index
set; they are reported as deactivated and removed from the system.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, StabilizationInfeasibleError
from .logs import log
from .splines import TensorSplineSpace, active_functions, element_basis_1d
from .trimming import Element, TrimmedMesh, tag_small_elements

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.1

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True, eq=False)
class LocalPolynomial:
    """
    Bivariate polynomials of degree <= (p1, p2) in element-local coordinates.

    The local coordinate is s = (xi - center) / half, mapping the source element
    onto [-1, 1]^2.

    Attributes:
        dofs: Global indices of the represented basis functions.
        coef: Monomial coefficients, ``coef[k, i, j]`` multiplies s1^i s2^j for dofs[k].
        center: Center of the source element.
        half: Half widths of the source element.
    """

    dofs: np.ndarray
    coef: np.ndarray
    center: np.ndarray
    half: np.ndarray

    def evaluate(
        self, points: np.ndarray, order: int = 0
    ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Values (n, nb) and, for order >= 1, gradients (n, nb, 2) at points."""
        if order > 1:
            raise DomainError("Extended evaluation supports derivatives up to order 1")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        s = (pts - self.center) / self.half
        values = np.stack([P.polyval2d(s[:, 0], s[:, 1], c) for c in self.coef], axis=-1)
        if order == 0:
            return values, None
        grads = np.empty(values.shape + (2,))
        for k, c in enumerate(self.coef):
            grads[:, k, 0] = P.polyval2d(s[:, 0], s[:, 1], P.polyder(c, axis=0)) / self.half[0]
            grads[:, k, 1] = P.polyval2d(s[:, 0], s[:, 1], P.polyder(c, axis=1)) / self.half[1]
        return values, grads


@dataclass(eq=False)
class ExtensionMap:
    """
    Substitution plan small element -> large neighbor.

    Attributes:
        gamma: Large-element threshold used.
        large: Large active elements, lexicographic order.
        small: Small active elements, lexicographic order.
        neighbors: Assigned large neighbor of every small element.
        polynomials: Local polynomials of every neighbor in use.
        deactivated_dofs: Global functions left without stabilized support.
    """

    gamma: float
    large: List[Element]
    small: List[Element]
    neighbors: Dict[Element, Element] = field(default_factory=dict)
    polynomials: Dict[Element, LocalPolynomial] = field(default_factory=dict)
    deactivated_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def is_small(self, element: Element) -> bool:
        return element in self.neighbors

    def source_element(self, element: Element) -> Element:
        """Element whose polynomials are used on ``element``."""
        return self.neighbors.get(element, element)

    @property
    def is_identity(self) -> bool:
        return not self.neighbors


# ============================================================================
# Core algorithm
# ============================================================================


def element_graph(mesh: TrimmedMesh) -> nx.Graph:
    """Face-adjacency graph of the active elements, with fractions as node data."""
    G = nx.grid_2d_graph(*mesh.grid.n)
    G.remove_nodes_from([e for e in list(G.nodes) if not mesh.is_active(e)])
    nx.set_node_attributes(G, {e: float(mesh.fraction[e]) for e in G.nodes}, "fraction")
    return G


def _diagonal_neighbors(mesh: TrimmedMesh, element: Element) -> List[Element]:
    n1, n2 = mesh.grid.n
    i, j = element
    out = []
    for di in (-1, 1):
        for dj in (-1, 1):
            e = (i + di, j + dj)
            if 0 <= e[0] < n1 and 0 <= e[1] < n2 and mesh.is_active(e):
                out.append(e)
    return out


def select_neighbor(
    mesh: TrimmedMesh,
    element: Element,
    gamma: float = DEFAULT_GAMMA,
    *,
    graph: Optional[nx.Graph] = None,
) -> Element:
    """Large neighbor of a small element maximizing |T' and S|.

    Face-adjacent elements are searched first; only when none of them is large
    are the diagonal (vertex-adjacent) elements considered, as happens at the
    corners of a domain trimmed on two meeting sides. Ties are broken by the
    lowest lexicographic element index.

    Raises:
        StabilizationInfeasibleError: If no face- or vertex-adjacent neighbor is large.
    """
    G = element_graph(mesh) if graph is None else graph
    if element not in G:
        raise DomainError(f"Element {element} is not active")
    candidates = [e for e in G.neighbors(element) if mesh.fraction[e] >= gamma]
    if not candidates:
        candidates = [e for e in _diagonal_neighbors(mesh, element) if mesh.fraction[e] >= gamma]
    if not candidates:
        small_neighbors = sorted(G.neighbors(element))
        detail = (
            f"its active neighbors {small_neighbors} are small as well (chains are not supported)"
            if small_neighbors
            else "it has no active neighbor"
        )
        raise StabilizationInfeasibleError(
            f"Small element {element} has no large neighbor: {detail}",
            element=element,
        )
    return min(candidates, key=lambda e: (-float(mesh.fraction[e]), e))


def _extract_1d(space1d, element: int) -> np.ndarray:
    """Monomial coefficients (p+1 functions x p+1 powers) of the element pieces."""
    p = space1d.degree
    x0, x1 = space1d.element_bounds(element)
    center, half = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
    s = np.cos(np.pi * (np.arange(p + 1) + 0.5) / (p + 1))
    _, ders = element_basis_1d(space1d, element, center + half * s, 0)
    V = P.polyvander(s, p)
    return np.linalg.solve(V, ders[0].T).T


def _local_polynomials(space: TensorSplineSpace, element: Element) -> LocalPolynomial:
    c1 = _extract_1d(space.space1, element[0])
    c2 = _extract_1d(space.space2, element[1])
    coef = np.einsum("ai,bj->abij", c1, c2).reshape(-1, c1.shape[1], c2.shape[1])
    x0, y0, x1, y1 = space.element_box(element)
    return LocalPolynomial(
        dofs=active_functions(space, element),
        coef=coef,
        center=np.array([0.5 * (x0 + x1), 0.5 * (y0 + y1)]),
        half=np.array([0.5 * (x1 - x0), 0.5 * (y1 - y0)]),
    )


def extract_local_polynomial(
    space: TensorSplineSpace, element: Element, dof: int
) -> LocalPolynomial:
    """Polynomial representation of basis function ``dof`` on ``element``.

    Raises:
        IndexError: If ``dof`` is not active on the element.
    """
    local = _local_polynomials(space, element)
    hit = np.nonzero(local.dofs == dof)[0]
    if hit.size == 0:
        raise IndexError(f"Function {dof} is not active on element {element}")
    k = int(hit[0])
    return LocalPolynomial(local.dofs[k : k + 1], local.coef[k : k + 1], local.center, local.half)


def extended_basis_eval(
    ext: ExtensionMap, element: Element, points: np.ndarray, order: int = 1
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Neighbor polynomials of a small element evaluated at its points.

    Returns:
        ``(dofs, values, grads)``: the index set of the neighbor, values (n, nb)
        and gradients (n, nb, 2) (None for order 0).
    """
    if element not in ext.neighbors:
        raise DomainError(f"Element {element} has no assigned neighbor")
    poly = ext.polynomials[ext.neighbors[element]]
    values, grads = poly.evaluate(points, order)
    return poly.dofs, values, grads


def stabilize(
    mesh: TrimmedMesh,
    space: TensorSplineSpace,
    gamma: float = DEFAULT_GAMMA,
    *,
    verbose: bool = False,
) -> ExtensionMap:
    """Build the extension map of a classified mesh.

    Args:
        mesh: Classified trimmed mesh.
        space: Spline space on the mesh grid.
        gamma: Large-element threshold.
        verbose: Print a summary.

    Returns:
        ExtensionMap (empty when no element is small).
    """
    large, small = tag_small_elements(mesh, gamma)
    ext = ExtensionMap(gamma=gamma, large=large, small=small)
    if not small:
        log("No small elements: stabilization is the identity", "INFO",
            verbose=verbose, logger=logger)
        return ext

    G = element_graph(mesh)
    for e in small:
        neighbor = select_neighbor(mesh, e, gamma, graph=G)
        ext.neighbors[e] = neighbor
        if neighbor not in ext.polynomials:
            ext.polynomials[neighbor] = _local_polynomials(space, neighbor)

    supported = set()
    for e in large:
        supported.update(active_functions(space, e).tolist())
    active = set()
    for e in mesh.active_elements:
        active.update(active_functions(space, e).tolist())
    ext.deactivated_dofs = np.array(sorted(active - supported), dtype=int)

    log(
        f"Stabilized {len(small)} small elements with {len(ext.polynomials)} neighbors, "
        f"{ext.deactivated_dofs.size} functions deactivated",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return ext
