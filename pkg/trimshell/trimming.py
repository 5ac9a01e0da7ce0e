"""
Trimmed parametric domains and cut-cell quadrature.

The physical domain S is the part of the fictitious box S0 covered by a polygonal
trim region. Background elements are classified as inside, cut or outside by
clipping each element square against the region. Integrals over a cut element
T intersected with S use the clipped polygon, triangulated with earcut, with a
collapsed (Duffy) tensor Gauss rule mapped onto every triangle.

Terminology:
- "fraction": |T intersected with S| / |T| of an element.
- "large" element: fraction >= gamma; "small" element: active but not large.
- "active" element: any element with nonzero fraction (inside or cut).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import mapbox_earcut as earcut
import numpy as np
import shapely
import shapely.geometry as sgeom
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient

from .errors import DomainError
from .logs import log
from .splines import TensorSplineSpace

logger = logging.getLogger(__name__)

Element = Tuple[int, int]

OUTSIDE_FRACTION = 1e-12
EDGE_NAMES = ("left", "right", "bottom", "top")

# ============================================================================
# Data models
# ============================================================================


class ElementStatus(IntEnum):
    OUTSIDE = 0
    CUT = 1
    INSIDE = 2


@dataclass(frozen=True)
class ElementGrid:
    """
    Uniform background grid of the fictitious domain S0.

    Attributes:
        lo: Lower-left corner (xi1, xi2).
        hi: Upper-right corner.
        n: Number of elements per direction (n1, n2).
    """

    lo: Tuple[float, float]
    hi: Tuple[float, float]
    n: Tuple[int, int]

    def __post_init__(self):
        if self.n[0] < 1 or self.n[1] < 1:
            raise DomainError(f"Grid needs at least one element per direction, got {self.n}")
        if not (self.hi[0] > self.lo[0] and self.hi[1] > self.lo[1]):
            raise DomainError("Grid upper corner must exceed lower corner")

    @property
    def h(self) -> Tuple[float, float]:
        return (
            (self.hi[0] - self.lo[0]) / self.n[0],
            (self.hi[1] - self.lo[1]) / self.n[1],
        )

    @property
    def element_area(self) -> float:
        h1, h2 = self.h
        return h1 * h2

    def elements(self) -> List[Element]:
        """All element index pairs in lexicographic order."""
        return [(i, j) for i in range(self.n[0]) for j in range(self.n[1])]

    def element_box(self, element: Element) -> Tuple[float, float, float, float]:
        h1, h2 = self.h
        x0 = self.lo[0] + element[0] * h1
        y0 = self.lo[1] + element[1] * h2
        return x0, y0, x0 + h1, y0 + h2

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Element index pairs (n, 2) containing the points (clamped to the grid)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        h = np.asarray(self.h)
        idx = np.floor((pts - np.asarray(self.lo)) / h).astype(int)
        return np.clip(idx, 0, np.asarray(self.n) - 1)

    def edge_line(self, name: str) -> sgeom.LineString:
        x0, y0 = self.lo
        x1, y1 = self.hi
        corners = {
            "left": ((x0, y0), (x0, y1)),
            "right": ((x1, y0), (x1, y1)),
            "bottom": ((x0, y0), (x1, y0)),
            "top": ((x0, y1), (x1, y1)),
        }
        if name not in corners:
            raise DomainError(f"Unknown grid edge '{name}', expected one of {EDGE_NAMES}")
        return sgeom.LineString(corners[name])

    def spline_space(self, degree: int) -> TensorSplineSpace:
        """Maximally smooth spline space of the given degree on this grid."""
        return TensorSplineSpace.uniform(self.lo, self.hi, self.n, degree)


@dataclass(frozen=True, eq=False)
class TrimRegion:
    """
    Polygonal trim region in parametric coordinates.

    Attributes:
        polygon: Shapely polygon, exterior counterclockwise and holes clockwise.
        tol_arc: Chord tolerance used when arcs were flattened (0 if none).
    """

    polygon: sgeom.Polygon
    tol_arc: float = 0.0

    def __post_init__(self):
        poly = self.polygon
        if poly.is_empty or not isinstance(poly, sgeom.Polygon):
            raise DomainError("Trim region must be a single nonempty polygon")
        if not poly.is_valid:
            raise DomainError("Trim region polygon is not simple")
        object.__setattr__(self, "polygon", orient(poly, sign=1.0))

    @classmethod
    def rectangle(
        cls,
        lo: Tuple[float, float],
        hi: Tuple[float, float],
        holes: Sequence[sgeom.Polygon] = (),
        tol_arc: float = 0.0,
    ) -> "TrimRegion":
        outer = sgeom.box(lo[0], lo[1], hi[0], hi[1])
        poly = sgeom.Polygon(
            outer.exterior.coords, [h.exterior.coords for h in holes]
        )
        return cls(poly, tol_arc)

    @property
    def area(self) -> float:
        return float(self.polygon.area)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return tuple(float(v) for v in self.polygon.bounds)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points in the closed region."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return shapely.intersects_xy(self.polygon, pts[:, 0], pts[:, 1])

    def rings(self) -> List[np.ndarray]:
        """Oriented boundary rings as closed coordinate arrays, exterior first."""
        rings = [np.asarray(self.polygon.exterior.coords)]
        rings.extend(np.asarray(r.coords) for r in self.polygon.interiors)
        return rings

    def boundary_segments(self, which: str = "all") -> np.ndarray:
        """Oriented boundary segments, shape (k, 2, 2).

        Args:
            which: "all", "holes", "exterior" or one of the bounding-box sides
                "left", "right", "bottom", "top" (exterior segments lying on it).
        """
        rings = self.rings()
        if which == "holes":
            chosen = rings[1:]
        elif which in ("all",):
            chosen = rings
        else:
            chosen = rings[:1]
        segs = [np.stack([r[:-1], r[1:]], axis=1) for r in chosen if len(r) > 1]
        segs = np.concatenate(segs, axis=0) if segs else np.zeros((0, 2, 2))
        if which in EDGE_NAMES:
            x0, y0, x1, y1 = self.bounds
            axis, value = {
                "left": (0, x0),
                "right": (0, x1),
                "bottom": (1, y0),
                "top": (1, y1),
            }[which]
            scale = max(x1 - x0, y1 - y0)
            on_side = np.all(np.abs(segs[:, :, axis] - value) <= 1e-12 * scale, axis=1)
            segs = segs[on_side]
        return segs


def rounded_rectangle(
    center: Tuple[float, float],
    half_widths: Tuple[float, float],
    radius: float,
    tol_arc: float,
) -> sgeom.Polygon:
    """Axis-aligned rectangle with circular corners, arcs flattened to tol_arc.

    The corner arcs are produced by buffering the inner rectangle; the number of
    segments per quarter circle is the smallest one whose sagitta is <= tol_arc.
    """
    cx, cy = center
    hx, hy = half_widths
    if not 0 < radius < min(hx, hy):
        raise DomainError("Corner radius must be positive and below both half widths")
    if tol_arc <= 0:
        raise DomainError("Arc tolerance must be positive")
    half_angle = math.acos(max(1.0 - tol_arc / radius, -1.0))
    quad_segs = max(1, math.ceil((math.pi / 4.0) / half_angle))
    core = sgeom.box(cx - hx + radius, cy - hy + radius, cx + hx - radius, cy + hy - radius)
    return core.buffer(radius, quad_segs=quad_segs)


@dataclass(eq=False)
class TrimmedMesh:
    """
    Background grid classified against a trim region.

    Attributes:
        grid: The background grid.
        region: The trim region.
        status: ElementStatus values, shape (n1, n2).
        fraction: |T intersected with S| / |T|, shape (n1, n2).
        clipped: Clipped geometry of every cut element.
        cut_quad: Cached cut rules keyed by (element, order).
    """

    grid: ElementGrid
    region: TrimRegion
    status: np.ndarray
    fraction: np.ndarray
    clipped: Dict[Element, BaseGeometry] = field(default_factory=dict)
    cut_quad: Dict[Tuple[Element, int], Tuple[np.ndarray, np.ndarray]] = field(
        default_factory=dict
    )

    @property
    def active_elements(self) -> List[Element]:
        i, j = np.nonzero(self.status != ElementStatus.OUTSIDE)
        return sorted(zip(i.tolist(), j.tolist()))

    @property
    def cut_elements(self) -> List[Element]:
        i, j = np.nonzero(self.status == ElementStatus.CUT)
        return sorted(zip(i.tolist(), j.tolist()))

    def is_active(self, element: Element) -> bool:
        return bool(self.status[element] != ElementStatus.OUTSIDE)

    def element_measure(self, element: Element) -> float:
        return float(self.fraction[element]) * self.grid.element_area

    def element_rule(self, element: Element, order: int) -> Tuple[np.ndarray, np.ndarray]:
        """Quadrature rule on T intersected with S (tensor Gauss if T is inside)."""
        st = self.status[element]
        if st == ElementStatus.OUTSIDE:
            return np.zeros((0, 2)), np.zeros(0)
        if st == ElementStatus.INSIDE:
            return tensor_gauss_rule(self.grid.element_box(element), order)
        key = (element, order)
        if key not in self.cut_quad:
            self.cut_quad[key] = triangulated_rule(self.clipped[element], order)
        return self.cut_quad[key]


# ============================================================================
# Quadrature rules
# ============================================================================


def gauss_rule_01(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    if order < 1:
        raise DomainError("Quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def tensor_gauss_rule(
    box: Tuple[float, float, float, float], order: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule with ``order`` points per direction on a rectangle."""
    x0, y0, x1, y1 = box
    s, w = gauss_rule_01(order)
    X, Y = np.meshgrid(x0 + (x1 - x0) * s, y0 + (y1 - y0) * s, indexing="ij")
    W = np.outer(w, w) * (x1 - x0) * (y1 - y0)
    return np.stack([X.ravel(), Y.ravel()], axis=-1), W.ravel()


def triangle_rule(
    vertices: np.ndarray, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule on a triangle (all weights positive).

    The unit square (s, t) is mapped by x = v0 + s [(1 - t)(v1 - v0) + t (v2 - v0)],
    whose Jacobian is 2 |T| s.
    """
    v0, v1, v2 = np.asarray(vertices, dtype=float)
    area2 = abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0]))
    s, ws = gauss_rule_01(order)
    S, T = np.meshgrid(s, s, indexing="ij")
    S, T = S.ravel(), T.ravel()
    pts = v0 + S[:, None] * ((1.0 - T)[:, None] * (v1 - v0) + T[:, None] * (v2 - v0))
    w = np.outer(ws, ws).ravel() * S * area2
    return pts, w


def _polygons(geom: BaseGeometry) -> List[sgeom.Polygon]:
    if geom.is_empty:
        return []
    if isinstance(geom, sgeom.Polygon):
        return [geom]
    if hasattr(geom, "geoms"):
        out: List[sgeom.Polygon] = []
        for g in geom.geoms:
            out.extend(_polygons(g))
        return out
    return []


def _triangulate(poly: sgeom.Polygon) -> np.ndarray:
    """Earcut triangulation of a polygon with holes, shape (k, 3, 2)."""
    rings = [np.asarray(poly.exterior.coords)[:-1]]
    rings.extend(np.asarray(r.coords)[:-1] for r in poly.interiors)
    verts = np.concatenate(rings, axis=0).astype(np.float64)
    ends = np.cumsum([len(r) for r in rings]).astype(np.uint32)
    tris = np.asarray(earcut.triangulate_float64(verts, ends), dtype=np.int64)
    return verts[tris.reshape(-1, 3)]


def triangulated_rule(
    geom: BaseGeometry, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature rule on a (multi)polygon via triangulation."""
    pts: List[np.ndarray] = []
    wts: List[np.ndarray] = []
    for poly in _polygons(geom):
        for tri in _triangulate(poly):
            p, w = triangle_rule(tri, order)
            if w.sum() <= 1e-30:
                continue
            pts.append(p)
            wts.append(w)
    if not pts:
        return np.zeros((0, 2)), np.zeros(0)
    return np.concatenate(pts, axis=0), np.concatenate(wts)


def cut_quadrature(
    box: Tuple[float, float, float, float], region: TrimRegion, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature rule on an element square clipped against the trim region.

    Args:
        box: Element square (x0, y0, x1, y1).
        region: Trim region.
        order: Gauss points per direction on every triangle.

    Returns:
        ``(points, weights)``; empty arrays if the clip is empty.
    """
    clip = sgeom.box(*box).intersection(region.polygon)
    return triangulated_rule(clip, order)


# ============================================================================
# Classification
# ============================================================================


def classify_elements(
    grid: ElementGrid, region: TrimRegion, *, verbose: bool = False
) -> TrimmedMesh:
    """Classify all grid elements against the trim region.

    Args:
        grid: Background grid.
        region: Trim region inside the grid box.
        verbose: Print a classification summary.

    Returns:
        TrimmedMesh with statuses, fractions and clipped cut geometry.
    """
    x0, y0, x1, y1 = region.bounds
    slack = 1e-12 * max(grid.hi[0] - grid.lo[0], grid.hi[1] - grid.lo[1])
    if (
        x0 < grid.lo[0] - slack
        or y0 < grid.lo[1] - slack
        or x1 > grid.hi[0] + slack
        or y1 > grid.hi[1] + slack
    ):
        raise DomainError("Trim region extends beyond the background grid")

    elements = grid.elements()
    boxes = shapely.box(*np.asarray([grid.element_box(e) for e in elements]).T)
    shapely.prepare(region.polygon)
    covered = shapely.covers(region.polygon, boxes)
    clips = shapely.intersection(boxes, region.polygon)
    areas = shapely.area(clips)

    full = grid.element_area
    status = np.full(grid.n, ElementStatus.OUTSIDE, dtype=int)
    fraction = np.zeros(grid.n)
    clipped: Dict[Element, BaseGeometry] = {}
    for e, cov, clip, area in zip(elements, covered, clips, areas):
        if cov:
            status[e] = ElementStatus.INSIDE
            fraction[e] = 1.0
            continue
        frac = area / full
        if area < 1e-16 * full or frac < OUTSIDE_FRACTION:
            continue
        if frac >= 1.0 - 1e-14:
            status[e] = ElementStatus.INSIDE
            fraction[e] = 1.0
            continue
        status[e] = ElementStatus.CUT
        fraction[e] = min(frac, 1.0)
        clipped[e] = clip

    mesh = TrimmedMesh(grid, region, status, fraction, clipped)
    n_in = int(np.sum(status == ElementStatus.INSIDE))
    n_cut = int(np.sum(status == ElementStatus.CUT))
    log(
        f"Classified {len(elements)} elements: {n_in} inside, {n_cut} cut, "
        f"{len(elements) - n_in - n_cut} outside",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return mesh


def tag_small_elements(
    mesh: TrimmedMesh, gamma: float
) -> Tuple[List[Element], List[Element]]:
    """Split active elements into large (fraction >= gamma) and small ones."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    large: List[Element] = []
    small: List[Element] = []
    for e in mesh.active_elements:
        (large if mesh.fraction[e] >= gamma else small).append(e)
    return large, small


def total_active_measure(mesh: TrimmedMesh, elements: Optional[Iterable[Element]] = None) -> float:
    """Sum of |T intersected with S| over the given (default: active) elements."""
    chosen = mesh.active_elements if elements is None else elements
    return float(sum(mesh.element_measure(e) for e in chosen))
