"""Structured hexahedral meshes, shape functions, quadrature and DOF numbering.

Elements are 20-node serendipity bricks. Displacements use all 20 nodes
(quadratic); the auxiliary field ``chi`` is trilinear on the 8 corners, which
gives 20*3 + 8*9 = 132 element DOFs.

Local node order follows the VTK quadratic hexahedron (cell type 25):
corners 0-7, then the midside nodes of edges
(0,1) (1,2) (2,3) (3,0) (4,5) (5,6) (6,7) (7,4) (0,4) (1,5) (2,6) (3,7).
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidMeshSpec, InvalidQuadrature, InvertedElement

__all__ = [
    "HEX20_REF", "HEX8_REF", "FACES", "Mesh", "DofMap", "QuadratureRule",
    "MappedPoint", "generate_block", "shape_u", "shape_chi", "gauss_rule",
    "isoparametric_map", "mesh_volume",
]

HEX8_REF = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)

_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
          (0, 4), (1, 5), (2, 6), (3, 7)]

HEX20_REF = np.vstack([HEX8_REF] + [0.5 * (HEX8_REF[a] + HEX8_REF[b]) for a, b in _EDGES])

FACES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Block mesh of Hex20 elements.

    Corner nodes are numbered first (``0 .. n_corner_nodes-1``), so a node
    carries chi DOFs iff its id is below ``n_corner_nodes``.
    """
    nodes: np.ndarray
    elements: np.ndarray
    n_corner_nodes: int
    faces: dict = field(default_factory=dict)
    lengths: tuple = (1.0, 1.0, 1.0)
    divisions: tuple = (1, 1, 1)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def element_size(self):
        return tuple(l / n for l, n in zip(self.lengths, self.divisions))

    def element_coords(self, e):
        return self.nodes[self.elements[e]]

    def centroids(self):
        return self.nodes[self.elements[:, :8]].mean(axis=1)

    def boundary_nodes(self, faces=FACES):
        return np.unique(np.concatenate([self.faces[f] for f in faces]))


def generate_block(l1, l2, l3, nx, ny, nz):
    """Regular ``nx x ny x nz`` Hex20 mesh of the box ``[0,l1]x[0,l2]x[0,l3]``."""
    dims = (l1, l2, l3)
    counts = (nx, ny, nz)
    if any(not (np.isfinite(v) and v > 0) for v in dims):
        raise InvalidMeshSpec(f"block lengths must be positive, got {dims}")
    if any(int(n) != n or n < 1 for n in counts):
        raise InvalidMeshSpec(f"element counts must be positive integers, got {counts}")
    nx, ny, nz = (int(n) for n in counts)

    # lattice of half-element spacing; keep points with at most one odd index
    shape = (2 * nx + 1, 2 * ny + 1, 2 * nz + 1)
    I, J, K = np.meshgrid(*(np.arange(s) for s in shape), indexing="ij")
    odd = (I % 2) + (J % 2) + (K % 2)
    ids = -np.ones(shape, dtype=np.int64)
    corner = odd == 0
    mid = odd == 1
    # lexicographic with x fastest inside each group
    order = lambda mask: np.argwhere(mask.transpose(2, 1, 0))[:, ::-1]
    corner_idx = order(corner)
    mid_idx = order(mid)
    n_corner = len(corner_idx)
    all_idx = np.vstack([corner_idx, mid_idx])
    ids[tuple(all_idx.T)] = np.arange(len(all_idx))
    h = np.array(dims) / (2 * np.array([nx, ny, nz]))
    nodes = all_idx * h

    ex, ey, ez = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    base = 2 * np.stack([ex, ey, ez], axis=-1).transpose(2, 1, 0, 3).reshape(-1, 3)
    offs = (HEX20_REF + 1).astype(np.int64)
    lat = base[:, None, :] + offs[None, :, :]
    elements = ids[lat[..., 0], lat[..., 1], lat[..., 2]]

    tol = 1e-9 * max(dims)
    faces = {}
    for axis, (lo, hi) in enumerate([("xmin", "xmax"), ("ymin", "ymax"), ("zmin", "zmax")]):
        faces[lo] = np.flatnonzero(np.abs(nodes[:, axis]) < tol)
        faces[hi] = np.flatnonzero(np.abs(nodes[:, axis] - dims[axis]) < tol)
    return Mesh(nodes=nodes, elements=elements, n_corner_nodes=n_corner, faces=faces,
                lengths=tuple(float(d) for d in dims), divisions=(nx, ny, nz))


class DofMap:
    """Global numbering: all displacement DOFs first, then chi DOFs.

    ``u`` DOF of node ``a``, component ``i``: ``3*a + i``.
    ``chi`` DOF of corner node ``c``, component ``(k, l)``:
    ``3*n_nodes + 9*c + 3*k + l``.
    """

    def __init__(self, mesh):
        self.n_nodes = mesh.n_nodes
        self.n_corner = mesh.n_corner_nodes
        self.n_u = 3 * self.n_nodes
        self.n_chi = 9 * self.n_corner
        self.n_dofs = self.n_u + self.n_chi
        el = mesh.elements
        u = (3 * el[:, :, None] + np.arange(3)).reshape(len(el), 60)
        c = (self.n_u + 9 * el[:, :8, None] + np.arange(9)).reshape(len(el), 72)
        self.element_dofs = np.hstack([u, c])

    def u_dofs(self, nodes):
        nodes = np.asarray(nodes)
        return (3 * nodes[..., None] + np.arange(3)).reshape(nodes.shape + (3,))

    def chi_dofs(self, corners):
        corners = np.asarray(corners)
        if np.any(corners >= self.n_corner):
            raise IndexError("chi DOFs live on corner nodes only")
        return self.n_u + 9 * corners[..., None] + np.arange(9)

    def split(self, d):
        """View a global vector as ``(u[n_nodes, 3], chi[n_corner, 3, 3])``."""
        d = np.asarray(d)
        return d[:self.n_u].reshape(-1, 3), d[self.n_u:].reshape(-1, 3, 3)

    def join(self, u, chi):
        return np.concatenate([np.ravel(u), np.ravel(chi)])

    def initial(self):
        """Undeformed state: ``u = 0`` and ``chi = I`` (= Cof I)."""
        return self.join(np.zeros((self.n_nodes, 3)), np.tile(np.eye(3), (self.n_corner, 1, 1)))


class QuadratureRule(NamedTuple):
    points: np.ndarray
    weights: np.ndarray


def gauss_rule(order=3):
    """Tensor-product Gauss-Legendre rule with ``order`` points per axis."""
    if order not in (2, 3):
        raise InvalidQuadrature(f"unsupported quadrature order {order!r}; use 2 or 3")
    x, w = np.polynomial.legendre.leggauss(order)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    WX, WY, WZ = np.meshgrid(w, w, w, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    return QuadratureRule(pts, (WX * WY * WZ).ravel())


def shape_u(xi):
    """Serendipity Hex20 shape functions and reference gradients.

    ``xi`` has shape ``(..., 3)``; returns ``N (..., 20)`` and
    ``dN (..., 20, 3)``.
    """
    xi = np.asarray(xi, dtype=float)[..., None, :]
    r = HEX20_REF
    s = xi * r                       # (..., 20, 3)
    one = 1.0 + s
    N = np.empty(s.shape[:-1])
    dN = np.empty(s.shape)
    c = slice(0, 8)
    # corners: 1/8 (1+s1)(1+s2)(1+s3)(s1+s2+s3-2)
    prod = one[..., c, 0] * one[..., c, 1] * one[..., c, 2]
    ssum = s[..., c, 0] + s[..., c, 1] + s[..., c, 2] - 2.0
    N[..., c] = 0.125 * prod * ssum
    for k in range(3):
        others = [m for m in range(3) if m != k]
        dprod = r[c, k] * one[..., c, others[0]] * one[..., c, others[1]]
        dN[..., c, k] = 0.125 * (dprod * ssum + prod * r[c, k])
    # midside nodes: the coordinate with r = 0 gets the bubble (1 - xi^2)
    for n in range(8, 20):
        k0 = int(np.flatnonzero(r[n] == 0)[0])
        k1, k2 = [m for m in range(3) if m != k0]
        b = 1.0 - xi[..., 0, k0] ** 2
        f1 = one[..., n, k1]
        f2 = one[..., n, k2]
        N[..., n] = 0.25 * b * f1 * f2
        dN[..., n, k0] = 0.25 * (-2.0 * xi[..., 0, k0]) * f1 * f2
        dN[..., n, k1] = 0.25 * b * r[n, k1] * f2
        dN[..., n, k2] = 0.25 * b * f1 * r[n, k2]
    return N, dN


def shape_chi(xi):
    """Trilinear shape functions on the 8 corners: ``N (..., 8)``, ``dN (..., 8, 3)``."""
    xi = np.asarray(xi, dtype=float)[..., None, :]
    one = 1.0 + xi * HEX8_REF
    N = 0.125 * one[..., 0] * one[..., 1] * one[..., 2]
    dN = np.empty(one.shape)
    dN[..., 0] = 0.125 * HEX8_REF[:, 0] * one[..., 1] * one[..., 2]
    dN[..., 1] = 0.125 * HEX8_REF[:, 1] * one[..., 0] * one[..., 2]
    dN[..., 2] = 0.125 * HEX8_REF[:, 2] * one[..., 0] * one[..., 1]
    return N, dN


class MappedPoint(NamedTuple):
    x: np.ndarray
    jacobian: np.ndarray
    det: float
    grad_u: np.ndarray
    grad_chi: np.ndarray


def isoparametric_map(coords, xi):
    """Map reference point ``xi`` of the element with node ``coords (20, 3)``.

    ``jacobian[i, j] = dx_i / dxi_j``; the returned gradients are with
    respect to physical coordinates.
    """
    coords = np.asarray(coords, dtype=float)
    N, dN = shape_u(xi)
    _, dNc = shape_chi(xi)
    x = N @ coords
    Jg = coords.T @ dN
    dJ = float(np.linalg.det(Jg))
    if not dJ > 0:
        raise InvertedElement(f"element Jacobian {dJ:g} <= 0 at xi={np.asarray(xi).tolist()}")
    Jinv = np.linalg.inv(Jg)
    return MappedPoint(x, Jg, dJ, dN @ Jinv, dNc @ Jinv)


def mesh_volume(mesh, rule=None):
    rule = gauss_rule(3) if rule is None else rule
    _, dN = shape_u(rule.points)
    Jg = np.einsum("ean,qnb->eqab", mesh.nodes[mesh.elements].transpose(0, 2, 1), dN)
    return float(np.sum(np.linalg.det(Jg) * rule.weights))
