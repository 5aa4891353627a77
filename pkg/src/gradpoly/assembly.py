"""Element residuals and stiffness, global sparse assembly, Dirichlet elimination.

All element quantities are evaluated for every element and quadrature point
at once (arrays indexed ``[e, q, ...]``). The element DOF vector is
``[u (20 nodes x 3), chi (8 corners x 9)]``, node-major, components
row-major, matching :class:`gradpoly.mesh.DofMap`.

The internal force vectors are

    f_int = sum_q w B_u^T P,     g_int = sum_q w (N_chi^T S_m + B_chi^T mu)

and the tangent blocks ``K_uu = sum B_u^T D_uu B_u``,
``K_uchi = sum B_u^T D_uchi N_chi`` and
``K_chichi = sum (H N_chi^T N_chi + K B_chi^T B_chi)``.
"""
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import materials as mat
from . import tensors as T
from .errors import InconsistentBC, InvertedElement, NonPositiveJacobian
from .mesh import DofMap, HEX20_REF, gauss_rule, shape_chi, shape_u

__all__ = [
    "ElementVectors", "SparseSystem", "ReducedSystem", "Constraints",
    "Discretization", "element_residual", "element_stiffness",
    "element_energy", "assemble", "apply_dirichlet", "total_energy",
]


class ElementVectors(NamedTuple):
    f_u: np.ndarray
    g_chi: np.ndarray


class SparseSystem(NamedTuple):
    """Tangent ``matrix`` (CSR) and ``rhs`` = residual ``f_int - f_ext`` (plus g_int)."""
    matrix: sp.csr_matrix
    rhs: np.ndarray


class Constraints(NamedTuple):
    """Prescribed values for a set of global DOFs (increments, in Newton use)."""
    dofs: np.ndarray
    values: np.ndarray

    @classmethod
    def from_pairs(cls, dofs, values):
        """Merge possibly repeated ``dofs``; conflicting values raise."""
        dofs = np.asarray(dofs, dtype=np.int64).ravel()
        values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape).ravel()
        order = np.argsort(dofs, kind="stable")
        dofs, values = dofs[order], values[order]
        uniq, first = np.unique(dofs, return_index=True)
        counts = np.diff(np.append(first, len(dofs)))
        ref = np.repeat(values[first], counts)
        if np.any(np.abs(values - ref) > 1e-12 * (1.0 + np.abs(ref))):
            bad = dofs[np.flatnonzero(np.abs(values - ref) > 1e-12 * (1.0 + np.abs(ref)))[0]]
            raise InconsistentBC(f"conflicting prescribed values for DOF {int(bad)}")
        return cls(uniq, values[first])


class ReducedSystem(NamedTuple):
    """``matrix @ x = rhs`` on the free DOFs, with known columns moved to ``rhs``.

    Solving gives the free part of the Newton increment ``K dx = -r``.
    """
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    full: SparseSystem

    def expand(self, x_free):
        """Full increment vector from the free-DOF solution."""
        out = np.zeros(len(self.full.rhs))
        out[self.free] = x_free
        out[self.fixed] = self.fixed_values
        return out

    def reactions(self, x_free):
        """Linearized residual on the fixed DOFs after applying the increment."""
        dx = self.expand(x_free)
        return self.full.rhs[self.fixed] + self.full.matrix[self.fixed] @ dx


def apply_dirichlet(system, constraints):
    """Eliminate prescribed DOFs from ``K dx = -r``."""
    n = len(system.rhs)
    fixed = np.asarray(constraints.dofs, dtype=np.int64)
    if fixed.size and (fixed.min() < 0 or fixed.max() >= n):
        raise IndexError("constrained DOF out of range")
    if len(np.unique(fixed)) != len(fixed):
        constraints = Constraints.from_pairs(constraints.dofs, constraints.values)
        fixed = constraints.dofs
    values = np.asarray(constraints.values, dtype=float)
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    K = system.matrix.tocsr()
    Kf = K[free]
    rhs = -system.rhs[free] - Kf[:, fixed] @ values
    return ReducedSystem(Kf[:, free].tocsr(), rhs, free, fixed, values, system)


def _geometry(X, rule):
    """Physical shape-function gradients and weights for element coords ``X (E,20,3)``."""
    Nu, dNu = shape_u(rule.points)
    Nc, dNc = shape_chi(rule.points)
    Jg = np.einsum("ena,qnb->eqab", X, dNu)
    detJ = np.linalg.det(Jg)
    if np.any(~(detJ > 0)):
        e, q = np.argwhere(~(detJ > 0))[0]
        raise InvertedElement(f"element {e}: Jacobian {detJ[e, q]:g} <= 0 at quadrature point {q}")
    Jinv = np.linalg.inv(Jg)
    Gu = np.einsum("qnb,eqba->eqna", dNu, Jinv)
    Gc = np.einsum("qnb,eqba->eqna", dNc, Jinv)
    return Nu, Nc, Gu, Gc, detJ * rule.weights


class Discretization:
    """Mesh + material + quadrature with cached geometry and sparsity.

    Parameters
    ----------
    mesh : Mesh
    params : MaterialParams
    rule : QuadratureRule, optional
        Defaults to the 27-point Gauss rule.
    body_force : array_like (3,), optional
        Constant dead load per unit reference volume.
    tractions : dict, optional
        ``{face_name: (3,) vector}`` constant dead tractions.
    """

    def __init__(self, mesh, params, rule=None, body_force=None, tractions=None):
        self.mesh = mesh
        self.params = params
        self.rule = gauss_rule(3) if rule is None else rule
        self.dofmap = DofMap(mesh)
        X = mesh.nodes[mesh.elements]
        self.Nu, self.Nc, self.Gu, self.Gc, self.wdet = _geometry(X, self.rule)
        self.n_dofs = self.dofmap.n_dofs
        self.edofs = self.dofmap.element_dofs
        self.f_ext = self._external_forces(body_force, tractions or {})
        self._kcc = None
        self._pattern = None

    # ------------------------------------------------------------------ fields
    def kinematics(self, d):
        """``(F, chi, grad_chi)`` at every quadrature point."""
        u, chi = self.dofmap.split(d)
        return _kinematics(u[self.mesh.elements], chi[self.mesh.elements[:, :8]],
                           self.Nc, self.Gu, self.Gc)

    def det_f(self, d):
        return T.det(self.kinematics(d)[0])

    # ----------------------------------------------------------------- energy
    def element_energies(self, d):
        F, chi, G = self.kinematics(d)
        try:
            W = mat.energy_total(self.params, (F, chi, G))
        except NonPositiveJacobian as exc:
            raise NonPositiveJacobian(
                f"det F <= 0 in element {exc.where[0]} at quadrature point {exc.where[1]}",
                where=exc.where) from None
        return np.sum(W * self.wdet, axis=1)

    def energy(self, d):
        """Total potential energy; ``+inf`` if det F <= 0 anywhere."""
        try:
            return float(np.sum(self.element_energies(d)) - self.f_ext @ d)
        except NonPositiveJacobian:
            return np.inf

    # ---------------------------------------------------------------- vectors
    def element_vectors(self, d):
        F, chi, G = self.kinematics(d)
        return _element_vectors(self.params, F, chi, G, self.Nc, self.Gu, self.Gc, self.wdet)

    def residual(self, d):
        """Global ``[f_int - f_ext, g_int]``."""
        fe = self.element_vectors(d)
        r = np.bincount(self.edofs.ravel(), weights=fe.ravel(), minlength=self.n_dofs)
        return r - self.f_ext

    # ---------------------------------------------------------------- matrices
    def element_matrices(self, d):
        F, chi, _ = self.kinematics(d)
        return _element_matrices(self.params, F, chi, self.Nc, self.Gu, self.wdet,
                                 self.kcc_block())

    def kcc_block(self):
        """State-independent chi-chi element block, shape ``(E, 72, 72)``."""
        if self._kcc is None:
            self._kcc = _kcc(self.params, self.Nc, self.Gc, self.wdet)
        return self._kcc

    def _sparsity(self):
        if self._pattern is None:
            n = self.n_dofs
            ed = self.edofs
            rows = np.repeat(ed, ed.shape[1], axis=1).ravel()
            cols = np.tile(ed, (1, ed.shape[1])).ravel()
            keys, inverse = np.unique(rows * n + cols, return_inverse=True)
            r, c = np.divmod(keys, n)
            indptr = np.searchsorted(r, np.arange(n + 1))
            self._pattern = (inverse.ravel(), c.astype(np.int32), indptr.astype(np.int64), len(keys))
        return self._pattern

    def stiffness(self, d):
        inverse, indices, indptr, nnz = self._sparsity()
        Ke = self.element_matrices(d)
        data = np.bincount(inverse, weights=Ke.ravel(), minlength=nnz)
        return sp.csr_matrix((data, indices, indptr), shape=(self.n_dofs, self.n_dofs))

    def system(self, d):
        return SparseSystem(self.stiffness(d), self.residual(d))

    # ------------------------------------------------------------------ loads
    def _external_forces(self, body_force, tractions):
        f = np.zeros(self.n_dofs)
        if body_force is not None and np.any(body_force):
            b = np.asarray(body_force, dtype=float)
            fe = np.einsum("qa,eq,i->eai", self.Nu, self.wdet, b).reshape(len(self.wdet), 60)
            f += np.bincount(self.edofs[:, :60].ravel(), weights=fe.ravel(), minlength=self.n_dofs)
        for face, t in tractions.items():
            t = np.asarray(t, dtype=float)
            if not np.any(t):
                continue
            f += self._face_load(face, t)
        return f

    def _face_load(self, face, t):
        axis = "xyz".index(face[0])
        side = -1.0 if face.endswith("min") else 1.0
        on_face = np.zeros(self.mesh.n_nodes, dtype=bool)
        on_face[self.mesh.faces[face]] = True
        local = np.flatnonzero(HEX20_REF[:, axis] == side)
        els = np.flatnonzero(on_face[self.mesh.elements[:, local]].all(axis=1))
        x, w = np.polynomial.legendre.leggauss(3)
        a, b = [k for k in range(3) if k != axis]
        A, B = np.meshgrid(x, x, indexing="ij")
        pts = np.zeros((9, 3))
        pts[:, axis] = side
        pts[:, a] = A.ravel()
        pts[:, b] = B.ravel()
        wts = np.outer(w, w).ravel()
        N, dN = shape_u(pts)
        f = np.zeros(self.n_dofs)
        for e in els:
            X = self.mesh.nodes[self.mesh.elements[e]]
            ta = dN[:, :, a] @ X
            tb = dN[:, :, b] @ X
            dA = np.linalg.norm(np.cross(ta, tb), axis=1) * wts
            fe = np.einsum("qn,q,i->ni", N, dA, t).ravel()
            np.add.at(f, self.edofs[e, :60], fe)
        return f


# ---------------------------------------------------------------- kernels
def _kinematics(ue, ce, Nc, Gu, Gc):
    F = T.IDENTITY + np.einsum("eai,eqaj->eqij", ue, Gu)
    chi = np.einsum("qb,ebij->eqij", Nc, ce)
    G = np.einsum("ebij,eqbk->eqijk", ce, Gc)
    return F, chi, G


def _element_vectors(params, F, chi, G, Nc, Gu, Gc, wdet):
    P = mat.first_pk_stress(params, F, chi) * wdet[..., None, None]
    Sm = mat.relative_stress(params, F, chi) * wdet[..., None, None]
    mu = mat.higher_order_stress(params, G) * wdet[..., None, None, None]
    fu = np.einsum("eqij,eqaj->eai", P, Gu)
    gc = np.einsum("eqij,qb->ebij", Sm, Nc) + np.einsum("eqijk,eqbk->ebij", mu, Gc)
    E = len(F)
    return np.hstack([fu.reshape(E, 60), gc.reshape(E, 72)])


def _kcc(params, Nc, Gc, wdet):
    mass = np.einsum("eq,qb,qc->ebc", wdet, Nc, Nc)
    lap = np.einsum("eq,eqbk,eqck->ebc", wdet, Gc, Gc)
    scalar = params.H_chi * mass + params.K_grad * lap
    return np.einsum("ebc,mn->ebmcn", scalar, np.eye(9)).reshape(len(wdet), 72, 72)


def _element_matrices(params, F, chi, Nc, Gu, wdet, kcc):
    E, Q = wdet.shape
    tb = mat.tangent_blocks(params, F, chi)
    w = wdet[..., None, None, None, None]
    Duu = tb.d_uu * w
    Duc = tb.d_uchi * w
    # B_u^T D: contract Gu[e,q,a,j] with D[e,q,i,j,k,l] -> [e,q,a,(i,k,l)]
    GD = Gu @ Duu.transpose(0, 1, 3, 2, 4, 5).reshape(E, Q, 3, 27)
    GD = GD.reshape(E, Q, 20, 3, 3, 3).transpose(0, 2, 3, 4, 1, 5).reshape(E, 180, Q * 3)
    Kuu = GD @ Gu.transpose(0, 1, 3, 2).reshape(E, Q * 3, 20)
    # (e, a, i, k, b) -> (e, a, i, b, k)
    Kuu = Kuu.reshape(E, 20, 3, 3, 20).transpose(0, 1, 2, 4, 3).reshape(E, 60, 60)
    GC = Gu @ Duc.transpose(0, 1, 3, 2, 4, 5).reshape(E, Q, 3, 27)
    Kuc = GC.reshape(E, Q, 540).transpose(0, 2, 1) @ Nc
    Kuc = Kuc.reshape(E, 20, 3, 9, 8).transpose(0, 1, 2, 4, 3).reshape(E, 60, 72)
    K = np.empty((E, 132, 132))
    K[:, :60, :60] = Kuu
    K[:, :60, 60:] = Kuc
    K[:, 60:, :60] = Kuc.transpose(0, 2, 1)
    K[:, 60:, 60:] = kcc
    return K


# ----------------------------------------------------------- element API
def _single(coords, d_u, d_chi, params, rule):
    rule = gauss_rule(3) if rule is None else rule
    X = np.asarray(coords, dtype=float)[None]
    Nu, Nc, Gu, Gc, wdet = _geometry(X, rule)
    ue = np.asarray(d_u, dtype=float).reshape(1, 20, 3)
    ce = np.asarray(d_chi, dtype=float).reshape(1, 8, 3, 3)
    F, chi, G = _kinematics(ue, ce, Nc, Gu, Gc)
    return F, chi, G, Nc, Gu, Gc, wdet


def _raise_with_qp(params, F):
    J = T.det(F)
    if np.any(~(J > 0)):
        e, q = np.argwhere(~(J > 0))[0]
        raise NonPositiveJacobian(f"det F = {J[e, q]:g} <= 0 at quadrature point {q}",
                                  where=(int(e), int(q)))


def element_energy(coords, d_u, d_chi, params, rule=None):
    F, chi, G, Nc, Gu, Gc, wdet = _single(coords, d_u, d_chi, params, rule)
    _raise_with_qp(params, F)
    return float(np.sum(mat.energy_total(params, (F, chi, G)) * wdet))


def element_residual(coords, d_u, d_chi, params, rule=None):
    """Internal force vectors of one element (60 u-components, 72 chi-components)."""
    F, chi, G, Nc, Gu, Gc, wdet = _single(coords, d_u, d_chi, params, rule)
    _raise_with_qp(params, F)
    v = _element_vectors(params, F, chi, G, Nc, Gu, Gc, wdet)[0]
    return ElementVectors(v[:60], v[60:])


def element_stiffness(coords, d_u, d_chi, params, rule=None):
    """132 x 132 tangent of one element, ordered ``[u, chi]``."""
    F, chi, G, Nc, Gu, Gc, wdet = _single(coords, d_u, d_chi, params, rule)
    _raise_with_qp(params, F)
    return _element_matrices(params, F, chi, Nc, Gu, wdet, _kcc(params, Nc, Gc, wdet))[0]


# ------------------------------------------------------------ global API
def assemble(mesh, dofmap, fields, params, discretization=None, **loads):
    """Global tangent and residual at ``fields`` (a full DOF vector)."""
    disc = discretization or Discretization(mesh, params, **loads)
    if dofmap.n_dofs != disc.n_dofs or len(fields) != disc.n_dofs:
        raise ValueError("field vector length does not match the DOF map")
    try:
        return disc.system(np.asarray(fields, dtype=float))
    except NonPositiveJacobian as exc:
        where = exc.where
        raise NonPositiveJacobian(
            f"element {where[0]}, quadrature point {where[1]}: det F <= 0" if where else str(exc),
            where=where) from None


def total_energy(mesh, fields, params, discretization=None, **loads):
    """Potential energy ``int W dx - Pi_ext``; ``+inf`` when det F <= 0."""
    disc = discretization or Discretization(mesh, params, **loads)
    return disc.energy(np.asarray(fields, dtype=float))
