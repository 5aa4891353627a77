import numpy as np
import pytest
import scipy.sparse as sp

from gradpoly import materials as M
from gradpoly import tensors as T
from gradpoly.assembly import (Constraints, Discretization, apply_dirichlet, assemble,
                               element_energy, element_residual, element_stiffness,
                               total_energy)
from gradpoly.errors import InconsistentBC, NonPositiveJacobian
from gradpoly.mesh import HEX20_REF, DofMap, generate_block

P = M.MaterialParams("stvk", lambda_lame=1.5, mu_lame=1.0, H_chi=10.0, K_grad=0.5, K_vol=1.0)
NORM = M.MaterialParams("stvk_normalized", H_chi=2.0, K_grad=0.1)
X1 = 0.5 * (HEX20_REF + 1) * [1.0, 0.8, 0.6]


def random_element_state(rng, scale=0.03):
    du = scale * rng.standard_normal((20, 3))
    dc = np.eye(3) + 0.05 * rng.standard_normal((8, 3, 3))
    return du, dc


def test_undeformed_element_has_zero_residual():
    r = element_residual(X1, np.zeros((20, 3)), np.tile(np.eye(3), (8, 1, 1)), P)
    assert np.allclose(r.f_u, 0) and np.allclose(r.g_chi, 0)


def test_affine_state_chi_residual_vanishes():
    F = np.array([[1.1, 0.05, 0], [0.02, 0.95, 0.03], [0, 0.01, 1.05]])
    du = X1 @ (F - np.eye(3)).T
    dc = np.tile(T.cofactor(F), (8, 1, 1))
    r = element_residual(X1, du, dc, P)
    assert np.allclose(r.g_chi, 0, atol=1e-12)


@pytest.mark.parametrize("params", [P, NORM], ids=["stvk", "norm"])
def test_element_residual_is_energy_gradient(params):
    rng = np.random.default_rng(0)
    du, dc = random_element_state(rng)
    r = element_residual(X1, du, dc, params)
    v = np.concatenate([du.ravel(), dc.ravel()])
    g = np.concatenate([r.f_u, r.g_chi])
    h = 1e-6
    fd = np.empty(132)
    for k in range(132):
        e = np.zeros(132)
        e[k] = h
        ep = element_energy(X1, (v + e)[:60], (v + e)[60:], params)
        em = element_energy(X1, (v - e)[:60], (v - e)[60:], params)
        fd[k] = (ep - em) / (2 * h)
    assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


def test_element_stiffness_fd_and_symmetry():
    rng = np.random.default_rng(1)
    du, dc = random_element_state(rng)
    K = element_stiffness(X1, du, dc, P)
    assert np.linalg.norm(K - K.T) <= 1e-12 * np.linalg.norm(K)
    v = np.concatenate([du.ravel(), dc.ravel()])
    h = 1e-6
    fd = np.empty((132, 132))
    for k in range(132):
        e = np.zeros(132)
        e[k] = h
        rp = element_residual(X1, (v + e)[:60], (v + e)[60:], P)
        rm = element_residual(X1, (v - e)[:60], (v - e)[60:], P)
        fd[:, k] = (np.concatenate(rp) - np.concatenate(rm)) / (2 * h)
    assert np.linalg.norm(fd - K) <= 1e-5 * np.linalg.norm(K)


def test_kchichi_block_is_state_independent():
    rng = np.random.default_rng(2)
    K1 = element_stiffness(X1, *random_element_state(rng), P)
    K2 = element_stiffness(X1, *random_element_state(rng), P)
    assert np.array_equal(K1[60:, 60:], K2[60:, 60:])


def test_element_inverted_state_reports_point():
    du = -2.0 * X1
    with pytest.raises(NonPositiveJacobian) as info:
        element_residual(X1, du, np.tile(np.eye(3), (8, 1, 1)), P)
    assert info.value.where is not None


def test_single_element_assembly_matches_element():
    m = generate_block(1.0, 0.8, 0.6, 1, 1, 1)
    dm = DofMap(m)
    rng = np.random.default_rng(3)
    du, dc = random_element_state(rng)
    d = dm.join(du, dc)
    sys_ = assemble(m, dm, d, P)
    ed = dm.element_dofs[0]
    el = m.elements[0]
    Ke = element_stiffness(m.element_coords(0), du[el], dc[el[:8]], P)
    assert np.allclose(sys_.matrix.toarray()[np.ix_(ed, ed)], Ke, rtol=1e-10, atol=1e-10)
    re = element_residual(m.element_coords(0), du[el], dc[el[:8]], P)
    assert np.allclose(sys_.rhs[ed], np.concatenate(re), atol=1e-10)


def test_two_element_assembly_matches_dense_scatter():
    m = generate_block(2.0, 1.0, 1.0, 2, 1, 1)
    dm = DofMap(m)
    rng = np.random.default_rng(4)
    u = 0.02 * rng.standard_normal((m.n_nodes, 3))
    chi = np.eye(3) + 0.05 * rng.standard_normal((m.n_corner_nodes, 3, 3))
    d = dm.join(u, chi)
    Kd = np.zeros((dm.n_dofs, dm.n_dofs))
    rd = np.zeros(dm.n_dofs)
    for e in range(m.n_elements):
        ed = dm.element_dofs[e]
        args = (m.element_coords(e), u[m.elements[e]], chi[m.elements[e, :8]], P)
        Kd[np.ix_(ed, ed)] += element_stiffness(*args)
        rd[ed] += np.concatenate(element_residual(*args))
    s = assemble(m, dm, d, P)
    assert np.allclose(s.matrix.toarray(), Kd, rtol=1e-13, atol=1e-12)
    assert np.allclose(s.rhs, rd, atol=1e-13)
    # sparsity follows the element connectivity graph
    pattern = (np.abs(Kd) > 0).astype(int)
    assert sp.csr_matrix(s.matrix).nnz >= np.count_nonzero(pattern)


def test_global_residual_is_energy_gradient():
    m = generate_block(1.0, 1.0, 0.5, 2, 1, 1)
    disc = Discretization(m, P)
    rng = np.random.default_rng(5)
    d = disc.dofmap.initial() + 0.01 * rng.standard_normal(disc.n_dofs)
    r = disc.residual(d)
    h = 1e-6
    idx = rng.choice(disc.n_dofs, 40, replace=False)
    fd = []
    for k in idx:
        e = np.zeros(disc.n_dofs)
        e[k] = h
        fd.append((disc.energy(d + e) - disc.energy(d - e)) / (2 * h))
    assert np.linalg.norm(np.array(fd) - r[idx]) <= 1e-6 * np.linalg.norm(r[idx])


def test_energy_values():
    m = generate_block(1, 1, 1, 2, 2, 2)
    dm = DofMap(m)
    assert total_energy(m, dm.initial(), NORM) == pytest.approx(0.0, abs=1e-14)
    eps = 0.6
    F = np.diag([eps, eps, 1.0])
    d = dm.join(m.nodes @ (F - np.eye(3)).T, np.tile(T.cofactor(F), (m.n_corner_nodes, 1, 1)))
    assert total_energy(m, d, NORM) == pytest.approx(0.8192, rel=1e-12)
    bad = dm.join(-2.0 * m.nodes, np.tile(np.eye(3), (m.n_corner_nodes, 1, 1)))
    assert total_energy(m, bad, NORM) == np.inf


def test_translation_invariance():
    m = generate_block(1, 1, 1, 2, 1, 1)
    disc = Discretization(m, P)
    rng = np.random.default_rng(6)
    d = disc.dofmap.initial() + 0.01 * rng.standard_normal(disc.n_dofs)
    u, chi = disc.dofmap.split(d)
    d2 = disc.dofmap.join(u + [0.3, -0.1, 2.0], chi)
    assert disc.energy(d2) == pytest.approx(disc.energy(d), rel=1e-12)
    assert np.allclose(disc.residual(d2), disc.residual(d), atol=1e-12)


def test_external_loads():
    m = generate_block(2, 1, 1, 2, 1, 1)
    b = np.array([0.0, 0.0, -3.0])
    disc = Discretization(m, P, body_force=b, tractions={"xmax": [1.0, 0.0, 0.0]})
    f = disc.f_ext[:disc.dofmap.n_u].reshape(-1, 3)
    assert f[:, 2].sum() == pytest.approx(-3.0 * 2.0)
    assert f[:, 0].sum() == pytest.approx(1.0 * 1.0)
    d = disc.dofmap.initial()
    d[:disc.dofmap.n_u] += 0.01
    assert disc.energy(d) == pytest.approx(-(-6.0 + 1.0) * 0.01, rel=1e-12)


def test_apply_dirichlet():
    m = generate_block(1, 1, 1, 1, 1, 1)
    disc = Discretization(m, P)
    s = disc.system(disc.dofmap.initial())
    # all DOFs prescribed -> empty system
    allc = Constraints(np.arange(disc.n_dofs), np.ones(disc.n_dofs))
    red = apply_dirichlet(s, allc)
    assert red.matrix.shape == (0, 0)
    assert np.array_equal(red.expand(np.zeros(0)), np.ones(disc.n_dofs))
    # boundary u-DOFs of one element: only chi DOFs remain (a 20-node brick has no interior node)
    nodes = m.boundary_nodes()
    c = Constraints(disc.dofmap.u_dofs(nodes).ravel(), np.zeros(3 * len(nodes)))
    red = apply_dirichlet(s, c)
    assert red.matrix.shape == (72, 72)
    assert np.all(red.free >= disc.dofmap.n_u)
    # known columns move to the right-hand side
    vals = np.linspace(0, 1, 3 * len(nodes))
    red = apply_dirichlet(s, Constraints(c.dofs, vals))
    K = s.matrix.toarray()
    assert np.allclose(red.rhs, -s.rhs[red.free] - K[np.ix_(red.free, c.dofs)] @ vals)


def test_reactions_balance_on_fixed_body():
    m = generate_block(1, 1, 1, 2, 2, 1)
    disc = Discretization(m, P)
    s = disc.system(disc.dofmap.initial())
    nodes = m.boundary_nodes()
    c = Constraints(disc.dofmap.u_dofs(nodes).ravel(), np.zeros(3 * len(nodes)))
    red = apply_dirichlet(s, c)
    x = np.linalg.solve(red.matrix.toarray(), red.rhs) if red.matrix.shape[0] else np.zeros(0)
    reac = red.reactions(x).reshape(-1, 3)
    assert np.allclose(reac.sum(axis=0), 0.0, atol=1e-12)


def test_inconsistent_constraints():
    with pytest.raises(InconsistentBC):
        Constraints.from_pairs([1, 2, 1], [0.0, 1.0, 0.5])
    c = Constraints.from_pairs([3, 1, 3], [2.0, 1.0, 2.0])
    assert list(c.dofs) == [1, 3] and list(c.values) == [1.0, 2.0]
