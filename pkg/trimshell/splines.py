"""
B-spline spaces on the fictitious parametric domain.

Univariate spaces are built from open knot vectors; the bivariate space is their
tensor product. Evaluation follows the Cox-de Boor recursion in its triangular
(left/right difference) form, which also yields derivatives.

Conventions:
- Global function index of the tensor space: ``g = i1 * m2 + i2`` (direction 1 major).
- Element index pairs ``(e1, e2)`` are ordered lexicographically the same way.
- At an interior knot the right-limit polynomial is used; at the last knot the
  left limit, so every point of the closed knot range belongs to exactly one span.
- Passing an explicit ``span`` evaluates the polynomial piece of that span at any
  ``x``. This is how polynomial extension onto neighboring elements is realized.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, UnsupportedOrderError

# ============================================================================
# Data models
# ============================================================================


@dataclass(frozen=True, eq=False)
class KnotVector:
    """
    Open, nondecreasing knot vector.

    Attributes:
        values: Knot values, first and last repeated ``degree + 1`` times.
        degree: Polynomial degree p >= 1.
    """

    values: np.ndarray
    degree: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        p = int(self.degree)
        if p < 1:
            raise DomainError(f"Spline degree must be >= 1, got {p}")
        if values.ndim != 1 or values.size < 2 * (p + 1):
            raise DomainError("Knot vector too short for its degree")
        if np.any(np.diff(values) < 0):
            raise DomainError("Knot vector must be nondecreasing")
        if not (
            np.all(values[: p + 1] == values[0]) and np.all(values[-p - 1 :] == values[-1])
        ):
            raise DomainError("Knot vector must be open (end knots repeated p+1 times)")
        if values[0] == values[-1]:
            raise DomainError("Knot vector has zero length")
        _, counts = np.unique(values[p + 1 : -p - 1], return_counts=True)
        if counts.size and counts.max() > p:
            raise DomainError("Interior knot multiplicity must not exceed p")

    @classmethod
    def uniform(cls, start: float, end: float, n_elements: int, degree: int) -> "KnotVector":
        """Open uniform knot vector with maximal smoothness."""
        if n_elements < 1:
            raise DomainError("n_elements must be >= 1")
        inner = np.linspace(start, end, n_elements + 1)
        values = np.concatenate(
            [np.full(degree, start), inner, np.full(degree, end)]
        )
        return cls(values, degree)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.values)

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    def find_span(self, x: np.ndarray) -> np.ndarray:
        """Knot span index i with t_i <= x < t_{i+1} (last nonempty span at the end)."""
        t = self.values
        p = self.degree
        x = np.asarray(x, dtype=float)
        span = np.searchsorted(t, x, side="right") - 1
        last = t.size - p - 2
        return np.clip(span, p, last)


@dataclass(frozen=True)
class SplineSpace1D:
    """
    Univariate B-spline space.

    Attributes:
        knots: The open knot vector.
    """

    knots: KnotVector

    @classmethod
    def uniform(cls, start: float, end: float, n_elements: int, degree: int) -> "SplineSpace1D":
        return cls(KnotVector.uniform(start, end, n_elements, degree))

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def dim(self) -> int:
        return self.knots.values.size - self.degree - 1

    @property
    def n_elements(self) -> int:
        return self.knots.n_elements

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.knots.values[0]), float(self.knots.values[-1])

    def element_span(self, element: int) -> int:
        """Knot span index of the element-th nonempty knot interval."""
        if not 0 <= element < self.n_elements:
            raise DomainError(f"Element {element} outside 0..{self.n_elements - 1}")
        left = self.knots.breakpoints[element]
        return int(self.knots.find_span(left))

    def element_of(self, x: np.ndarray) -> np.ndarray:
        """Element index containing x (right-limit convention)."""
        bp = self.knots.breakpoints
        idx = np.searchsorted(bp, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, bp.size - 2)

    def element_bounds(self, element: int) -> Tuple[float, float]:
        bp = self.knots.breakpoints
        return float(bp[element]), float(bp[element + 1])


@dataclass(frozen=True)
class TensorSplineSpace:
    """
    Tensor-product spline space ``space1 x space2``.

    Attributes:
        space1: Space in direction 1.
        space2: Space in direction 2.
    """

    space1: SplineSpace1D
    space2: SplineSpace1D

    @classmethod
    def uniform(
        cls,
        lo: Tuple[float, float],
        hi: Tuple[float, float],
        n_elements: Tuple[int, int],
        degree: int,
    ) -> "TensorSplineSpace":
        return cls(
            SplineSpace1D.uniform(lo[0], hi[0], n_elements[0], degree),
            SplineSpace1D.uniform(lo[1], hi[1], n_elements[1], degree),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.space1.dim, self.space2.dim

    @property
    def dim(self) -> int:
        return self.space1.dim * self.space2.dim

    @property
    def degrees(self) -> Tuple[int, int]:
        return self.space1.degree, self.space2.degree

    @property
    def n_elements(self) -> Tuple[int, int]:
        return self.space1.n_elements, self.space2.n_elements

    def global_index(self, i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
        return np.asarray(i1) * self.space2.dim + np.asarray(i2)

    def element_box(self, element: Tuple[int, int]) -> Tuple[float, float, float, float]:
        x0, x1 = self.space1.element_bounds(element[0])
        y0, y1 = self.space2.element_bounds(element[1])
        return x0, y0, x1, y1


# ============================================================================
# Univariate evaluation
# ============================================================================


def _check_range(space: SplineSpace1D, x: np.ndarray) -> None:
    lo, hi = space.bounds
    if np.any(x < lo) or np.any(x > hi) or np.any(~np.isfinite(x)):
        raise DomainError(f"Evaluation point outside knot range [{lo}, {hi}]")


def _ders_on_span(
    t: np.ndarray, p: int, span: int, x: np.ndarray, order: int
) -> np.ndarray:
    """Values and derivatives of the p+1 functions of ``span`` at points x.

    Returns an array of shape (order + 1, p + 1, len(x)).
    """
    n = x.size
    left = np.zeros((p + 1, n))
    right = np.zeros((p + 1, n))
    ndu = np.zeros((p + 1, p + 1, n))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - t[span + 1 - j]
        right[j] = t[span + j] - x
        saved = np.zeros(n)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((order + 1, p + 1, n))
    ders[0] = ndu[:, p]
    for r in range(p + 1):
        a = np.zeros((2, p + 1, n))
        a[0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, order + 1):
            d = np.zeros(n)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    factor = p
    for k in range(1, order + 1):
        ders[k] *= factor
        factor *= p - k
    return ders


def eval_basis_derivs_1d(
    space: SplineSpace1D,
    x: float,
    order: int = 1,
    *,
    span: Optional[int] = None,
) -> Tuple[int, np.ndarray]:
    """Values and derivatives of the p+1 functions active at x.

    Args:
        space: Univariate spline space.
        x: Evaluation point inside the knot range (unchecked when ``span`` is given).
        order: Highest derivative order, at most the degree.
        span: Knot span whose polynomial pieces are evaluated. Defaults to the
            span containing x.

    Returns:
        ``(first_active, ders)`` with ``ders[k, r]`` the k-th derivative of
        function ``first_active + r``.
    """
    p = space.degree
    if order < 0 or order > p:
        raise UnsupportedOrderError(f"Derivative order {order} not available for p={p}")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if span is None:
        _check_range(space, xa)
        span = int(space.knots.find_span(xa[0]))
    ders = _ders_on_span(space.knots.values, p, span, xa, order)
    return span - p, ders[:, :, 0]


def eval_basis_1d(space: SplineSpace1D, x: float) -> Tuple[int, np.ndarray]:
    """Values of the p+1 functions active at x."""
    first, ders = eval_basis_derivs_1d(space, x, 0)
    return first, ders[0]


def element_basis_1d(
    space: SplineSpace1D,
    element: int,
    x: np.ndarray,
    order: int = 1,
) -> Tuple[int, np.ndarray]:
    """Polynomial pieces of ``element`` at many points.

    Points outside the element evaluate the element's polynomials there.

    Returns:
        ``(first_active, ders)`` with ders of shape (order + 1, p + 1, len(x)).
    """
    p = space.degree
    if order < 0 or order > p:
        raise UnsupportedOrderError(f"Derivative order {order} not available for p={p}")
    span = space.element_span(element)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    return span - p, _ders_on_span(space.knots.values, p, span, xa, order)


def eval_spline_1d(space: SplineSpace1D, coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate a univariate spline with the given coefficients."""
    coefficients = np.asarray(coefficients, dtype=float)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _check_range(space, xa)
    out = np.empty(xa.size)
    elements = space.element_of(xa)
    for e in np.unique(elements):
        mask = elements == e
        first, ders = element_basis_1d(space, int(e), xa[mask], 0)
        out[mask] = coefficients[first : first + space.degree + 1] @ ders[0]
    return out


def greville_points(space: SplineSpace1D) -> np.ndarray:
    """Greville abscissae g_i = mean(t_{i+1}, ..., t_{i+p}).

    Used as coefficients they reproduce the identity x exactly.
    """
    t = space.knots.values
    window = np.lib.stride_tricks.sliding_window_view(t[1:-1], space.degree)
    return window.mean(axis=1)


# ============================================================================
# Tensor-product evaluation
# ============================================================================


def active_functions(space: TensorSplineSpace, element: Tuple[int, int]) -> np.ndarray:
    """Global indices of the (p1+1)(p2+1) functions supported on an element."""
    e1, e2 = element
    n1, n2 = space.n_elements
    if not (0 <= e1 < n1 and 0 <= e2 < n2):
        raise DomainError(f"Element {element} outside the {n1}x{n2} grid")
    p1, p2 = space.degrees
    f1 = space.space1.element_span(e1) - p1
    f2 = space.space2.element_span(e2) - p2
    i1, i2 = np.meshgrid(np.arange(f1, f1 + p1 + 1), np.arange(f2, f2 + p2 + 1), indexing="ij")
    return space.global_index(i1.ravel(), i2.ravel())


def tensor_basis(
    space: TensorSplineSpace,
    element: Tuple[int, int],
    points: np.ndarray,
    order: int = 1,
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """Tensor basis of an element's polynomial pieces at points.

    Args:
        space: Tensor spline space.
        element: Element whose polynomials are evaluated (points may lie outside).
        points: Array (n, 2) of parametric points.
        order: 0, 1 or 2.

    Returns:
        ``(dofs, values, grads, hessians)``; values (n, nb), grads (n, nb, 2),
        hessians (n, nb, 2, 2). Higher-order entries are None when not requested.
    """
    if order > 2:
        raise UnsupportedOrderError("Tensor basis provides derivatives up to order 2")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    o1 = min(order, space.space1.degree)
    o2 = min(order, space.space2.degree)
    _, d1 = element_basis_1d(space.space1, element[0], pts[:, 0], o1)
    _, d2 = element_basis_1d(space.space2, element[1], pts[:, 1], o2)

    def der(arr: np.ndarray, k: int) -> np.ndarray:
        return arr[k] if k < arr.shape[0] else np.zeros_like(arr[0])

    def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        # (nb1, n) x (nb2, n) -> (n, nb1 * nb2) in direction-1-major order
        return np.einsum("in,jn->nij", a, b).reshape(pts.shape[0], -1)

    dofs = active_functions(space, element)
    values = outer(d1[0], d2[0])
    grads = hessians = None
    if order >= 1:
        grads = np.stack([outer(der(d1, 1), d2[0]), outer(d1[0], der(d2, 1))], axis=-1)
    if order >= 2:
        h11 = outer(der(d1, 2), d2[0])
        h12 = outer(der(d1, 1), der(d2, 1))
        h22 = outer(d1[0], der(d2, 2))
        hessians = np.stack(
            [np.stack([h11, h12], axis=-1), np.stack([h12, h22], axis=-1)], axis=-2
        )
    return dofs, values, grads, hessians


def eval_spline_2d(
    space: TensorSplineSpace, coefficients: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Evaluate a scalar tensor spline (coefficients indexed globally) at points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _check_range(space.space1, pts[:, 0])
    _check_range(space.space2, pts[:, 1])
    e1 = space.space1.element_of(pts[:, 0])
    e2 = space.space2.element_of(pts[:, 1])
    out = np.empty(pts.shape[0])
    for el in sorted(set(zip(e1.tolist(), e2.tolist()))):
        mask = (e1 == el[0]) & (e2 == el[1])
        dofs, values, _, _ = tensor_basis(space, el, pts[mask], 0)
        out[mask] = values @ np.asarray(coefficients)[dofs]
    return out
