import math

import numpy as np
import pytest

from assembly import (assemble_system, dump_matrices, singular_quadrature_error,
                      singular_quadrature_order, triangle_quadrature)
from basis import reference_shapes
from errors import InvalidParameterError, WindowError
from config import MESH_CONFIG
from geometry import PhysicalSystem, make_transform
from mesh import build_mesh
from solver import schroedinger_solve


@pytest.fixture(scope="module")
def small_setup():
    system = PhysicalSystem(Z1=1.0, Z2=1.0, R=2.0)
    spec = make_transform(4, 15.0, 2.0)
    mesh = build_mesh(2, 3, spec.s_max)
    return system, spec, mesh, reference_shapes(3)


@pytest.fixture(scope="module")
def relativistic_assembly(small_setup):
    system, spec, mesh, shapes = small_setup
    return assemble_system(mesh, shapes, system, spec, eps0=-1.0, k_max=4, n_I=10)


class TestQuadrature:
    def test_weights_sum_to_area(self):
        assert triangle_quadrature(25).weights.sum() == pytest.approx(0.5, abs=1e-15)

    def test_monomial_exactness(self):
        rule = triangle_quadrature(25)
        a, b = rule.points[:, 0], rule.points[:, 1]
        for i in range(0, 21):
            for j in range(0, 21 - i):
                exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
                assert rule.integrate(a ** i * b ** j) == pytest.approx(exact, rel=1e-13, abs=1e-16)

    def test_points_are_interior(self):
        rule = triangle_quadrature(5)
        assert np.all(rule.points > 0)
        assert np.all(rule.points.sum(axis=1) < 1)

    @pytest.mark.parametrize("n_I", [1, 41, 2.5])
    def test_invalid(self, n_I):
        with pytest.raises(InvalidParameterError):
            triangle_quadrature(n_I)


class TestAssembly:
    def test_dimensions(self, small_setup, relativistic_assembly):
        _, _, mesh, _ = small_setup
        asm = relativistic_assembly
        assert asm.full_dim == 2 * (mesh.N - (mesh.p * mesh.m + 1))
        assert asm.dim == asm.full_dim - asm.metadata["dropped"] == asm.kept.size
        assert asm.A_data.shape[0] == 5
        assert asm.metadata["Ne"] == mesh.Ne

    def test_symmetry(self, relativistic_assembly):
        asm = relativistic_assembly
        for matrix in asm.A + [asm.S, asm.W]:
            dense = matrix.toarray()
            np.testing.assert_allclose(dense, dense.T, atol=1e-12 * np.abs(dense).max())

    def test_overlap_is_block_diagonal_and_positive(self, relativistic_assembly):
        asm = relativistic_assembly
        S = asm.S.toarray()
        first = asm.kept % 2 == 0
        assert np.all(S[np.ix_(first, ~first)] == 0.0)
        assert np.linalg.eigvalsh(S).min() > 0

    def test_potential_matrix_negative(self, relativistic_assembly):
        assert np.linalg.eigvalsh(relativistic_assembly.W.toarray()).max() < 0

    def test_kinetic_family_positive_semidefinite(self, relativistic_assembly):
        for A in relativistic_assembly.A:
            dense = A.toarray()
            assert np.linalg.eigvalsh(dense).min() > -1e-10 * np.abs(dense).max()

    def test_pencil_at_eps0(self, relativistic_assembly):
        asm = relativistic_assembly
        expected = (asm.A[0] + asm.W).toarray()
        np.testing.assert_allclose(asm.pencil_matrix(asm.eps0).toarray(), expected)
        assert asm.delta(asm.eps0) == 0.0

    def test_pencil_derivative(self, relativistic_assembly):
        asm = relativistic_assembly
        x = np.random.default_rng(1).standard_normal(asm.dim)
        eps, h = -1.05, 1e-2

        def quad(e):
            return float(x @ (asm.pencil_matrix(e) @ x))

        fd = (quad(eps + h) - quad(eps - h)) / (2 * h)
        assert asm.pencil_derivative(eps, x) == pytest.approx(fd, rel=1e-6)

    def test_expansion_ratio(self, relativistic_assembly):
        asm = relativistic_assembly
        assert asm.expansion_ratio(asm.eps0) == 0.0
        assert 0 < asm.expansion_ratio(-1.1) < 1e-5
        assert asm.tail_estimate(asm.eps0, np.ones(asm.dim)) == 0.0

    def test_nonrelativistic_has_single_kinetic_matrix(self, small_setup):
        system, spec, mesh, shapes = small_setup
        asm = assemble_system(mesh, shapes, system.nonrelativistic(), spec, n_I=10)
        assert asm.k_max == 0
        assert asm.A_data.shape[0] == 1
        assert asm.delta(-3.0) == 0.0

    def test_requires_eps0(self, small_setup):
        system, spec, mesh, shapes = small_setup
        with pytest.raises(InvalidParameterError):
            assemble_system(mesh, shapes, system, spec)

    def test_eps0_outside_window(self, small_setup):
        system, spec, mesh, shapes = small_setup
        with pytest.raises(WindowError):
            assemble_system(mesh, shapes, system, spec, eps0=0.5)

    def test_mismatched_inputs(self, small_setup):
        system, spec, mesh, _ = small_setup
        with pytest.raises(InvalidParameterError):
            assemble_system(mesh, reference_shapes(2), system, spec, eps0=-1.0)
        other = build_mesh(2, 3, spec.s_max * 2)
        with pytest.raises(InvalidParameterError):
            assemble_system(other, reference_shapes(3), system, spec, eps0=-1.0)

    def test_dump_matrices(self, relativistic_assembly):
        text = dump_matrices(relativistic_assembly)
        headers = [line for line in text.splitlines() if line.startswith("#")]
        assert [h.split()[1] for h in headers] == ["A0", "A1", "A2", "A3", "A4", "S", "W"]

    def test_restrict_and_expand(self, relativistic_assembly):
        asm = relativistic_assembly
        full = np.arange(asm.full_dim, dtype=float)
        np.testing.assert_array_equal(asm.restrict(full), full[asm.kept])
        np.testing.assert_array_equal(asm.expand(asm.restrict(full))[asm.kept], full[asm.kept])
        with pytest.raises(InvalidParameterError):
            asm.restrict(np.ones(asm.full_dim + 1))

    def test_without_removes_rows_and_columns(self, relativistic_assembly):
        asm = relativistic_assembly
        dropped = np.array([0, 3, asm.dim - 1])
        smaller = asm.without(dropped)
        keep = np.setdiff1d(np.arange(asm.dim), dropped)
        assert smaller.dim == asm.dim - 3
        np.testing.assert_array_equal(smaller.kept, asm.kept[keep])
        for big, small in [(asm.S, smaller.S), (asm.W, smaller.W), (asm.A[2], smaller.A[2])]:
            np.testing.assert_array_equal(small.toarray(), big.toarray()[np.ix_(keep, keep)])


class TestDegenerateOverlap:
    """nu = 8, p = 10: the transformed measure vanishes to high order on s = 0 and the axis"""

    @pytest.fixture(scope="class")
    def hydrogen_nu8(self):
        system = PhysicalSystem(Z1=1.0, Z2=0.0, R=1.0).nonrelativistic()
        spec = make_transform(8, 20.0, 1.0)
        mesh = build_mesh(4, 10, spec.s_max)
        return system, spec, mesh, reference_shapes(10)

    def test_dependent_dofs_are_dropped(self, hydrogen_nu8):
        system, spec, mesh, shapes = hydrogen_nu8
        asm = assemble_system(mesh, shapes, system, spec)
        assert asm.metadata["dropped"] > 0
        assert asm.summary()["dropped"] == asm.full_dim - asm.dim
        np.linalg.cholesky(asm.S.toarray())

    def test_ground_state_survives(self, hydrogen_nu8):
        system, spec, mesh, shapes = hydrogen_nu8
        result = schroedinger_solve(mesh, system, spec, shapes=shapes)
        assert -0.5 - 1e-10 < result.energy < -0.5 + 1e-6
        assert result.vector.size == 2 * (mesh.N - (mesh.p * mesh.m + 1))
        assert result.eigenvalues_below == 0


class TestSingularQuadrature:
    def test_schroedinger_limit_needs_nothing(self):
        system = PhysicalSystem(Z1=90.0, Z2=0.0, R=2 / 90).nonrelativistic()
        assert singular_quadrature_error(system, 2, 10) == 0.0
        assert singular_quadrature_order(system, 2, 10) == 10

    def test_light_nuclei_keep_n_I(self):
        system = PhysicalSystem(Z1=1.0, Z2=1.0, R=2.0)
        assert singular_quadrature_order(system, 8, 20) == 20
        assert singular_quadrature_order(system, 2, 25) == 25

    def test_order_is_raised_for_heavy_nucleus(self):
        system = PhysicalSystem(Z1=90.0, Z2=0.0, R=2 / 90)
        n = singular_quadrature_order(system, 4, 10)
        assert 10 < n <= 25
        tol = MESH_CONFIG["singular_quadrature_tol"]
        assert singular_quadrature_error(system, 4, n) <= tol < singular_quadrature_error(system, 4, n - 1)

    def test_small_nu_rejected_for_heavy_nucleus(self):
        system = PhysicalSystem(Z1=90.0, Z2=0.0, R=2 / 90)
        with pytest.raises(InvalidParameterError):
            singular_quadrature_order(system, 2, 25)
        spec = make_transform(2, 0.35, system.R)
        mesh = build_mesh(2, 3, spec.s_max)
        with pytest.raises(InvalidParameterError):
            assemble_system(mesh, reference_shapes(3), system, spec, eps0=-4000.0, n_I=40)

    def test_assembly_records_raised_order(self):
        system = PhysicalSystem(Z1=90.0, Z2=0.0, R=2 / 90)
        spec = make_transform(4, 0.35, system.R)
        mesh = build_mesh(2, 3, spec.s_max)
        asm = assemble_system(mesh, reference_shapes(3), system, spec, eps0=-4000.0, k_max=2,
                              n_I=10)
        assert asm.n_I == singular_quadrature_order(system, 4, 10) > 10
