import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradpoly.errors import InvalidMeshSpec, InvalidQuadrature, InvertedElement
from gradpoly.mesh import (HEX8_REF, HEX20_REF, DofMap, gauss_rule, generate_block,
                           isoparametric_map, mesh_volume, shape_chi, shape_u)

xi3 = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).map(np.array)


def test_single_element_block():
    m = generate_block(1, 1, 1, 1, 1, 1)
    assert (m.n_elements, m.n_nodes, m.n_corner_nodes) == (1, 20, 8)
    assert np.allclose(m.nodes[m.elements[0]], 0.5 * (HEX20_REF + 1))


@pytest.mark.parametrize("n,count", [((10, 10, 2), 200), ((20, 20, 2), 800)])
def test_block_counts_and_volume(n, count):
    m = generate_block(5, 5, 0.5, *n)
    assert m.n_elements == count
    nx, ny, nz = n
    corners = (nx + 1) * (ny + 1) * (nz + 1)
    mids = nx * (ny + 1) * (nz + 1) + (nx + 1) * ny * (nz + 1) + (nx + 1) * (ny + 1) * nz
    assert (m.n_corner_nodes, m.n_nodes) == (corners, corners + mids)
    assert mesh_volume(m) == pytest.approx(12.5, rel=1e-12)


def test_connectivity_valid_and_corner_first():
    m = generate_block(2, 1, 1, 3, 2, 2)
    assert m.elements.min() == 0 and m.elements.max() == m.n_nodes - 1
    assert np.all(m.elements[:, :8] < m.n_corner_nodes)
    assert np.all(m.elements[:, 8:] >= m.n_corner_nodes)
    # every element is a positively oriented box
    X = m.nodes[m.elements]
    assert np.allclose(X[:, 6] - X[:, 0], m.element_size)


def test_faces():
    m = generate_block(2, 3, 1, 2, 3, 1)
    assert np.allclose(m.nodes[m.faces["xmax"], 0], 2.0)
    assert np.allclose(m.nodes[m.faces["zmin"], 2], 0.0)
    # corners 3 x 4, midsides on x-edges 2 x 4 and on y-edges 3 x 3
    assert len(m.faces["zmin"]) == 12 + 8 + 9


@pytest.mark.parametrize("args", [(0, 1, 1, 1, 1, 1), (1, 1, -1, 1, 1, 1),
                                  (1, 1, 1, 0, 1, 1), (1, 1, 1, 1, 1.5, 1)])
def test_invalid_mesh_spec(args):
    with pytest.raises(InvalidMeshSpec):
        generate_block(*args)


def test_shape_delta_property():
    N, _ = shape_u(HEX20_REF)
    assert np.allclose(N, np.eye(20), atol=1e-15)
    Nc, _ = shape_chi(HEX8_REF)
    assert np.allclose(Nc, np.eye(8), atol=1e-15)
    Nc0, _ = shape_chi(np.zeros(3))
    assert np.allclose(Nc0, 0.125)


@given(xi3)
def test_partition_of_unity(xi):
    N, dN = shape_u(xi)
    assert N.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(dN.sum(axis=0), 0.0, atol=1e-13)
    Nc, dNc = shape_chi(xi)
    assert Nc.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(dNc.sum(axis=0), 0.0, atol=1e-14)


def test_shape_gradients_fd():
    rng = np.random.default_rng(0)
    for xi in rng.uniform(-1, 1, (5, 3)):
        for fn in (shape_u, shape_chi):
            _, dN = fn(xi)
            for k in range(3):
                e = np.zeros(3)
                e[k] = 1e-6
                fd = (fn(xi + e)[0] - fn(xi - e)[0]) / 2e-6
                assert np.allclose(dN[:, k], fd, atol=1e-8)


def test_field_reproduction():
    rng = np.random.default_rng(1)
    X = 0.5 * (HEX20_REF + 1) * [2.0, 1.0, 0.5]
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 3, 3))
    quad = lambda x: x @ A.T + np.einsum("ijk,...j,...k->...i", B, x, x)
    grad = lambda x: A + np.einsum("ijk,k->ij", B, x) + np.einsum("ijk,j->ik", B, x)
    u = quad(X)
    for xi in rng.uniform(-1, 1, (10, 3)):
        mp = isoparametric_map(X, xi)
        assert np.allclose(u.T @ mp.grad_u, grad(mp.x), atol=1e-12)
        lin = X[:8] @ A.T
        assert np.allclose(lin.T @ mp.grad_chi, A, atol=1e-12)


def test_isoparametric_map_cases():
    X = 0.5 * (HEX20_REF + 1)
    mp = isoparametric_map(X, np.zeros(3))
    assert np.allclose(mp.x, 0.5) and np.allclose(mp.jacobian, 0.5 * np.eye(3))
    mp2 = isoparametric_map(X * [2.0, 1.0, 1.0], np.array([0.3, -0.2, 0.9]))
    assert mp2.det == pytest.approx(0.25)
    rng = np.random.default_rng(2)
    for xi in rng.uniform(-1, 1, (20, 3)):
        x = isoparametric_map(X * [2.0, 1.0, 1.0], xi).x
        assert np.all(x >= 0) and np.all(x <= [2.0, 1.0, 1.0])
    with pytest.raises(InvertedElement):
        isoparametric_map(X * [-1.0, 1.0, 1.0], np.zeros(3))


def test_gauss_rule():
    r = gauss_rule(3)
    assert len(r.weights) == 27 and r.weights.sum() == pytest.approx(8.0)
    assert np.sum(r.weights * np.prod(r.points**2, axis=1)) == pytest.approx(8 / 27, abs=1e-15)
    assert len(gauss_rule(2).weights) == 8
    for bad in (1, 4, "3"):
        with pytest.raises(InvalidQuadrature):
            gauss_rule(bad)


def test_dofmap():
    m = generate_block(1, 1, 1, 2, 1, 1)
    dm = DofMap(m)
    assert dm.element_dofs.shape == (2, 132)
    assert dm.n_dofs == 3 * m.n_nodes + 9 * m.n_corner_nodes
    used = np.unique(dm.element_dofs)
    assert np.array_equal(used, np.arange(dm.n_dofs))
    assert all(len(np.unique(row)) == 132 for row in dm.element_dofs)
    d = dm.initial()
    u, chi = dm.split(d)
    assert np.all(u == 0) and np.allclose(chi, np.eye(3))
    assert np.array_equal(dm.join(u, chi), d)
    assert np.array_equal(dm.chi_dofs(np.array([1]))[0], dm.n_u + 9 + np.arange(9))
    with pytest.raises(IndexError):
        dm.chi_dofs(np.array([m.n_corner_nodes]))
