import numpy as np
import pytest

from basis import GlobalFactorParams, global_factor, radial_factor, reference_shapes
from errors import InvalidParameterError
from geometry import PhysicalSystem, point_kinematics
from mesh import build_mesh


@pytest.mark.parametrize("p", range(1, 13))
def test_kronecker_property(p):
    shapes = reference_shapes(p)
    values, _ = shapes.evaluate(shapes.nodes)
    assert shapes.size == (p + 1) * (p + 2) // 2
    np.testing.assert_allclose(values, np.eye(shapes.size), atol=1e-10)


@pytest.mark.parametrize("p", [0, 13, 2.5])
def test_invalid_order(p):
    with pytest.raises(InvalidParameterError):
        reference_shapes(p)


def test_partition_of_unity():
    shapes = reference_shapes(6)
    rng = np.random.default_rng(3)
    a = rng.random(20)
    b = rng.random(20) * (1 - a)
    values, grads = shapes.evaluate(np.column_stack([a, b]))
    np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-9)


def test_reproduces_polynomials():
    shapes = reference_shapes(3)

    def f(x, y):
        return 1 + 2 * x - y + x * y ** 2 - 3 * x ** 3

    nodal = f(shapes.nodes[:, 0], shapes.nodes[:, 1])
    pts = np.array([[0.1, 0.2], [0.33, 0.5], [0.7, 0.05]])
    values, grads = shapes.evaluate(pts)
    np.testing.assert_allclose(values @ nodal, f(pts[:, 0], pts[:, 1]), atol=1e-12)
    dfx = 2 + pts[:, 1] ** 2 - 9 * pts[:, 0] ** 2
    dfy = -1 + 2 * pts[:, 0] * pts[:, 1]
    np.testing.assert_allclose(grads[..., 0] @ nodal, dfx, atol=1e-11)
    np.testing.assert_allclose(grads[..., 1] @ nodal, dfy, atol=1e-11)


def test_physical_gradient_of_linear_field():
    mesh = build_mesh(2, 2, 1.5)
    shapes = reference_shapes(2)
    s, t = mesh.nodes[:, 0], mesh.nodes[:, 1]
    field = 2 * s + 3 * t
    for e in range(mesh.Ne):
        _, grads = shapes.evaluate(np.array([[0.2, 0.3]]))
        physical = grads[0] @ mesh.gradient_map(e).T
        np.testing.assert_allclose(physical.T @ field[mesh.elements[e]], [2.0, 3.0], atol=1e-12)


class TestGlobalFactor:
    def test_params(self):
        params = GlobalFactorParams.from_system(PhysicalSystem(Z1=1, Z2=1, R=2))
        assert (params.m1, params.m2) == (0, 1)
        params = GlobalFactorParams.from_system(PhysicalSystem(Z1=1, Z2=1, R=2, jz=1.5))
        assert (params.m1, params.m2) == (1, 2)
        with pytest.raises(InvalidParameterError):
            params.m(3)

    def test_nonrelativistic_factor_is_one(self, h2plus, h2plus_spec):
        system = h2plus.nonrelativistic()
        kin = point_kinematics(np.array([0.3]), np.array([1.0]), system, h2plus_spec)
        H, dx, de = radial_factor(kin, GlobalFactorParams.from_system(system))
        assert H[0] == 1.0
        assert dx[0] == 0.0 and de[0] == 0.0

    @pytest.mark.parametrize("k", [1, 2])
    def test_value_and_derivatives(self, k):
        system = PhysicalSystem(Z1=90, Z2=90, R=2 / 90)
        from geometry import make_transform
        spec = make_transform(10, 0.35, system.R)
        params = GlobalFactorParams.from_system(system)
        s, t, h = np.array([0.6]), np.array([1.2]), 1e-6

        kin = point_kinematics(s, t, system, spec)
        G, G_s, G_t = global_factor(k, kin, params)
        expected = kin.u ** params.m(k) * kin.r1 ** (params.gamma1 - 1) * kin.r2 ** (params.gamma2 - 1)
        np.testing.assert_allclose(G, expected, rtol=1e-12)

        def value(ss, tt):
            return global_factor(k, point_kinematics(ss, tt, system, spec), params)[0]

        fd_s = (value(s + h, t) - value(s - h, t)) / (2 * h)
        fd_t = (value(s, t + h) - value(s, t - h)) / (2 * h)
        np.testing.assert_allclose(G_s, fd_s, rtol=1e-5)
        np.testing.assert_allclose(G_t, fd_t, rtol=1e-5)

    def test_vanishes_on_axis_for_positive_m(self, h2plus, h2plus_spec):
        params = GlobalFactorParams.from_system(h2plus)
        kin = point_kinematics(np.array([0.0, 0.5]), np.array([1.0, 0.0]), h2plus, h2plus_spec)
        G, _, _ = global_factor(2, kin, params)
        assert np.all(G == 0.0)
