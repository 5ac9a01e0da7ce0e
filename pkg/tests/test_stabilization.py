"""
Tests for polynomial-extension stabilization.
"""

import numpy as np
import pytest

from trimshell.assembly import MaterialParams, ShellDiscretization, assemble_mass
from trimshell.errors import DomainError, StabilizationInfeasibleError
from trimshell.geometry import SurfaceChart
from trimshell.splines import (
    TensorSplineSpace,
    active_functions,
    eval_spline_2d,
    greville_points,
    tensor_basis,
)
from trimshell.stabilization import (
    element_graph,
    extended_basis_eval,
    extract_local_polynomial,
    select_neighbor,
    stabilize,
)
from trimshell.trimming import (
    ElementGrid,
    ElementStatus,
    TrimmedMesh,
    TrimRegion,
    classify_elements,
)


def trimmed_plate(n: int, eps: float) -> TrimmedMesh:
    h = 1.0 / (n - 2 + 2 * eps)
    off = h - eps * h
    grid = ElementGrid((-0.5 - off, -0.5 - off), (0.5 + off, 0.5 + off), (n, n))
    return classify_elements(grid, TrimRegion.rectangle((-0.5, -0.5), (0.5, 0.5)))


def synthetic_mesh(fraction: np.ndarray) -> TrimmedMesh:
    """Mesh with prescribed fractions (geometry only used for the grid)."""
    n1, n2 = fraction.shape
    grid = ElementGrid((0.0, 0.0), (float(n1), float(n2)), (n1, n2))
    status = np.where(
        fraction >= 1.0,
        ElementStatus.INSIDE,
        np.where(fraction > 0.0, ElementStatus.CUT, ElementStatus.OUTSIDE),
    )
    region = TrimRegion.rectangle((0.0, 0.0), (float(n1), float(n2)))
    return TrimmedMesh(grid, region, status.astype(int), fraction.astype(float))


class TestSelectNeighbor:
    """Test the choice of the large neighbor."""

    def test_boundary_column_maps_inward(self):
        mesh = trimmed_plate(6, 0.05)
        assert select_neighbor(mesh, (0, 2)) == (1, 2)
        assert select_neighbor(mesh, (5, 3)) == (4, 3)
        assert select_neighbor(mesh, (2, 5)) == (2, 4)

    def test_corner_uses_diagonal_neighbor(self):
        mesh = trimmed_plate(6, 0.05)
        assert select_neighbor(mesh, (0, 0)) == (1, 1)
        assert select_neighbor(mesh, (5, 0)) == (4, 1)

    def test_argmax_fraction(self):
        fraction = np.array(
            [
                [0.0, 1.0, 0.0],
                [0.02, 0.05, 0.0],
                [0.0, 0.6, 0.0],
            ]
        )
        mesh = synthetic_mesh(fraction)
        assert select_neighbor(mesh, (1, 1)) == (0, 1)

    def test_tie_break_lexicographic(self):
        fraction = np.array(
            [
                [0.0, 1.0, 0.0],
                [1.0, 0.05, 0.0],
                [0.0, 1.0, 0.0],
            ]
        )
        mesh = synthetic_mesh(fraction)
        assert select_neighbor(mesh, (1, 1)) == (0, 1)

    def test_face_neighbor_preferred_over_diagonal(self):
        fraction = np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, 0.05, 0.3],
                [0.0, 0.0, 0.0],
            ]
        )
        mesh = synthetic_mesh(fraction)
        assert select_neighbor(mesh, (1, 1)) == (1, 2)

    def test_infeasible(self):
        fraction = np.array(
            [
                [0.0, 0.0, 0.0],
                [0.0, 0.05, 0.04],
                [0.0, 0.0, 0.0],
            ]
        )
        mesh = synthetic_mesh(fraction)
        with pytest.raises(StabilizationInfeasibleError, match="no large") as info:
            select_neighbor(mesh, (1, 1))
        assert info.value.element == (1, 1)

    def test_inactive_element(self):
        mesh = synthetic_mesh(np.array([[1.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(DomainError, match="not active"):
            select_neighbor(mesh, (0, 1))

    def test_graph_excludes_inactive(self):
        mesh = synthetic_mesh(np.array([[1.0, 0.0], [1.0, 1.0]]))
        G = element_graph(mesh)
        assert sorted(G.nodes) == [(0, 0), (1, 0), (1, 1)]
        assert G.nodes[(1, 0)]["fraction"] == 1.0


class TestLocalPolynomial:
    """Test extraction of element polynomials."""

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_reproduces_basis(self, p):
        space = TensorSplineSpace.uniform((0.0, 0.0), (1.0, 1.0), (4, 4), p)
        element = (1, 2)
        x0, y0, x1, y1 = space.element_box(element)
        rng = np.random.default_rng(p)
        pts = np.column_stack([rng.uniform(x0, x1, 10), rng.uniform(y0, y1, 10)])
        dofs, values, grads, _ = tensor_basis(space, element, pts, 1)
        for k, dof in enumerate(dofs):
            poly = extract_local_polynomial(space, element, int(dof))
            v, g = poly.evaluate(pts, 1)
            np.testing.assert_allclose(v[:, 0], values[:, k], atol=1e-12)
            np.testing.assert_allclose(g[:, 0], grads[:, k], atol=1e-10)

    def test_partition_of_unity(self):
        space = TensorSplineSpace.uniform((0.0, 0.0), (1.0, 1.0), (3, 3), 2)
        element = (1, 1)
        pts = np.random.default_rng(0).uniform(0.0, 1.0, (15, 2))
        total = np.zeros(15)
        for dof in active_functions(space, element):
            total += extract_local_polynomial(space, element, int(dof)).evaluate(pts)[0][:, 0]
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_inactive_dof(self):
        space = TensorSplineSpace.uniform((0.0, 0.0), (1.0, 1.0), (4, 4), 2)
        with pytest.raises(IndexError, match="not active"):
            extract_local_polynomial(space, (0, 0), space.dim - 1)

    def test_second_order_rejected(self):
        space = TensorSplineSpace.uniform((0.0, 0.0), (1.0, 1.0), (2, 2), 2)
        poly = extract_local_polynomial(space, (0, 0), 0)
        with pytest.raises(DomainError, match="order 1"):
            poly.evaluate(np.zeros((1, 2)), 2)


class TestStabilize:
    """Test the extension map of trimmed meshes."""

    def test_untrimmed_is_identity(self):
        grid = ElementGrid((0.0, 0.0), (1.0, 1.0), (4, 4))
        mesh = classify_elements(grid, TrimRegion.rectangle((0.0, 0.0), (1.0, 1.0)))
        ext = stabilize(mesh, grid.spline_space(2))
        assert ext.is_identity
        assert ext.deactivated_dofs.size == 0
        assert ext.small == []

    def test_every_small_element_has_large_neighbor(self):
        mesh = trimmed_plate(8, 0.01)
        ext = stabilize(mesh, mesh.grid.spline_space(2), 0.1)
        assert sorted(ext.neighbors) == sorted(ext.small)
        for small, large in ext.neighbors.items():
            assert mesh.fraction[large] >= 0.1
            assert max(abs(small[0] - large[0]), abs(small[1] - large[1])) == 1
            assert ext.source_element(small) == large
        assert ext.source_element((3, 3)) == (3, 3)

    def test_deactivated_count_external_trim(self):
        n, p = 16, 2
        mesh = trimmed_plate(n, 1e-8)
        ext = stabilize(mesh, mesh.grid.spline_space(p))
        m = n + p
        expected = []
        for i1 in range(m):
            for i2 in range(m):
                support = [
                    (a, b)
                    for a in range(max(0, i1 - p), min(n - 1, i1) + 1)
                    for b in range(max(0, i2 - p), min(n - 1, i2) + 1)
                    if mesh.is_active((a, b))
                ]
                if support and all(mesh.fraction[e] < 0.1 for e in support):
                    expected.append(i1 * m + i2)
        assert len(expected) > 0
        np.testing.assert_array_equal(ext.deactivated_dofs, expected)

    def test_extended_polynomial_reproduction(self):
        p = 2
        mesh = trimmed_plate(6, 0.05)
        space = mesh.grid.spline_space(p)
        ext = stabilize(mesh, space)
        g1, g2 = greville_points(space.space1), greville_points(space.space2)
        # x * y and x + y have exact spline coefficients
        coeffs = np.outer(g1, g2).ravel() + np.add.outer(g1, g2).ravel()
        pts = np.array([[-0.499, -0.3], [-0.4999, 0.2], [-0.4995, -0.49995]])
        for pt in pts:
            element = tuple(int(v) for v in mesh.grid.locate(pt[None, :])[0])
            dofs, values, grads = extended_basis_eval(ext, element, pt[None, :])
            assert np.array_equal(dofs, active_functions(space, ext.neighbors[element]))
            exact = pt[0] * pt[1] + pt[0] + pt[1]
            assert values[0] @ coeffs[dofs] == pytest.approx(exact, abs=1e-12)
            slope = grads[0].T @ coeffs[dofs]
            np.testing.assert_allclose(slope, [pt[1] + 1, pt[0] + 1], atol=1e-10)
            assert values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_extension_close_to_spline_on_small_element(self):
        """Near the trimmed edge the extension tracks the spline more closely on finer grids."""
        p = 3
        errs = []
        for n in (6, 12):
            mesh = trimmed_plate(n, 0.05)
            space = mesh.grid.spline_space(p)
            ext = stabilize(mesh, space)
            c1 = np.sin(2.0 * greville_points(space.space1))
            coeffs = np.repeat(c1, space.space2.dim)
            pt = np.array([[-0.5 + 1e-4, 0.0]])
            element = tuple(int(v) for v in mesh.grid.locate(pt)[0])
            dofs, values, _ = extended_basis_eval(ext, element, pt, 0)
            errs.append(abs(values[0] @ coeffs[dofs] - eval_spline_2d(space, coeffs, pt)[0]))
        assert errs[1] < errs[0] or errs[1] < 1e-12

    def test_no_neighbor_for_large_element(self):
        mesh = trimmed_plate(6, 0.05)
        ext = stabilize(mesh, mesh.grid.spline_space(2))
        with pytest.raises(DomainError, match="no assigned neighbor"):
            extended_basis_eval(ext, (2, 2), np.zeros((1, 2)))


class TestStabilizedAssembly:
    """Test properties of matrices assembled on the stabilized space."""

    @pytest.fixture(scope="class")
    def discretizations(self):
        mesh = trimmed_plate(6, 0.05)
        space = mesh.grid.spline_space(2)
        chart = SurfaceChart.flat_plate(mesh.grid.lo, mesh.grid.hi)
        plain = ShellDiscretization(mesh, space, chart)
        stab = ShellDiscretization(mesh, space, chart, stabilize(mesh, space))
        return plain, stab

    def test_sparsity_containment(self, discretizations):
        plain, stab = discretizations
        mat = MaterialParams()
        Mp, _ = assemble_mass(plain, mat)
        Ms, _ = assemble_mass(stab, mat)
        rows, cols = Ms.nonzero()
        gi, gj = stab.functions[rows], stab.functions[cols]
        Mp_dense = Mp.toarray()
        assert np.all(Mp_dense[plain.compact[gi], plain.compact[gj]] != 0.0)

    def test_identity_on_large_elements(self, discretizations):
        plain, stab = discretizations
        by_element = {d.element: d for d in plain.element_data()}
        small = set(stab.extension.small)
        for d in stab.element_data():
            if d.element in small:
                continue
            ref = by_element[d.element]
            assert np.array_equal(d.values, ref.values)
            assert np.array_equal(d.dofs, ref.dofs)

    def test_total_mass_preserved(self, discretizations):
        plain, stab = discretizations
        mat = MaterialParams(rho=2.0, tau=0.1)
        for disc in (plain, stab):
            M_u, _ = assemble_mass(disc, mat)
            assert M_u.sum() == pytest.approx(mat.rho * mat.tau * 1.0, rel=1e-10)
