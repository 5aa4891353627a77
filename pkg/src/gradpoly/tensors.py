"""Small dense tensor algebra on 3x3 arrays.

Every function broadcasts over leading axes, so ``F`` may be a single
``(3, 3)`` matrix or a stack ``(..., 3, 3)`` of them (one per quadrature
point, say).

The tensor cross product used throughout is

    (A x B)_ij = e_ikm e_jln A_kl B_mn,

which gives ``cofactor(F) = cross(F, F) / 2`` and the fourth-order operator
``(A x)_ijkl = e_imk e_jnl A_mn`` with ``(A x) : H = A x H`` and
``d cofactor(F) / dF = (F x)``.

Packing conventions (row-major throughout):

* second order: ``v[3*i + j] = A[i, j]`` (so ``pack2(F)[1] == F[0, 1]``)
* third order: ``g[9*i + 3*j + k] = T[i, j, k]``; for a gradient
  ``T[i, j, k] = d chi_ij / dx_k`` the spatial index runs fastest
* fourth order: ``D[3*i + j, 3*k + l] = A[i, j, k, l]``
"""
import numpy as np

from .errors import SingularMatrix

__all__ = [
    "LEVI_CIVITA", "IDENTITY", "cross", "cofactor", "cofactor_minors", "det",
    "inverse", "cross_fourth", "ddot", "ddot42", "dyad", "identity4",
    "pack2", "unpack2", "pack3", "unpack3", "pack4", "unpack4",
    "random_rotation",
]

LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0

IDENTITY = np.eye(3)

# cyclic successors: _N1[i] = i+1 mod 3, _N2[i] = i+2 mod 3
_N1 = np.array([1, 2, 0])
_N2 = np.array([2, 0, 1])


def _shift(A, rows, cols):
    return A[..., rows, :][..., :, cols]


def cross(A, B):
    """Tensor cross product of two second-order tensors."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return (_shift(A, _N1, _N1) * _shift(B, _N2, _N2)
            - _shift(A, _N1, _N2) * _shift(B, _N2, _N1)
            - _shift(A, _N2, _N1) * _shift(B, _N1, _N2)
            + _shift(A, _N2, _N2) * _shift(B, _N1, _N1))


def cofactor(F):
    """Cofactor ``Cof F = F x F / 2``; defined for singular ``F`` too."""
    return 0.5 * cross(F, F)


def cofactor_minors(F):
    """Cofactor from explicit signed 2x2 minors (reference implementation)."""
    F = np.asarray(F, dtype=float)
    out = np.empty(F.shape)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = (F[..., r[0], c[0]] * F[..., r[1], c[1]]
                     - F[..., r[0], c[1]] * F[..., r[1], c[0]])
            out[..., i, j] = (-1) ** (i + j) * minor
    return out


def det(F):
    F = np.asarray(F, dtype=float)
    return (F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
            - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
            + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0]))


def inverse(F):
    """Inverse via ``Cof(F)^T / det F``.

    Raises
    ------
    SingularMatrix
        If any matrix in the stack has a zero determinant.
    """
    F = np.asarray(F, dtype=float)
    J = det(F)
    if np.any(J == 0.0) or not np.all(np.isfinite(J)):
        raise SingularMatrix("inverse of a singular 3x3 matrix")
    return np.swapaxes(cofactor(F), -1, -2) / J[..., None, None]


# nonzero pattern of (A x)_ijkl: i != k, j != l, m = 3 - i - k, n = 3 - j - l
_CROSS4_TERMS = [(i, k, 3 - i - k, LEVI_CIVITA[i, 3 - i - k, k])
                 for i in range(3) for k in range(3) if i != k]


def cross_fourth(A):
    """Fourth-order tensor ``(A x)_ijkl = e_imk e_jnl A_mn``."""
    A = np.asarray(A, dtype=float)
    out = np.zeros(A.shape[:-2] + (3, 3, 3, 3))
    for i, k, m, si in _CROSS4_TERMS:
        for j, l, n, sj in _CROSS4_TERMS:
            out[..., i, j, k, l] = (si * sj) * A[..., m, n]
    return out


def ddot(A, B):
    """Double contraction ``A : B`` of second-order stacks."""
    return np.einsum("...ij,...ij->...", A, B)


def ddot42(D, H):
    """``(D : H)_ij = D_ijkl H_kl``."""
    return np.einsum("...ijkl,...kl->...ij", D, H)


def dyad(A, B):
    return np.einsum("...ij,...kl->...ijkl", A, B)


def identity4(sym=False):
    """Fourth-order identity ``d_ik d_jl``, or its symmetric projection."""
    I4 = np.einsum("ik,jl->ijkl", IDENTITY, IDENTITY)
    if sym:
        I4 = 0.5 * (I4 + np.einsum("il,jk->ijkl", IDENTITY, IDENTITY))
    return I4


def pack2(A):
    A = np.asarray(A)
    return A.reshape(A.shape[:-2] + (9,))


def unpack2(v):
    v = np.asarray(v)
    return v.reshape(v.shape[:-1] + (3, 3))


def pack3(T):
    T = np.asarray(T)
    return T.reshape(T.shape[:-3] + (27,))


def unpack3(g):
    g = np.asarray(g)
    return g.reshape(g.shape[:-1] + (3, 3, 3))


def pack4(D):
    D = np.asarray(D)
    return D.reshape(D.shape[:-4] + (9, 9))


def unpack4(M):
    M = np.asarray(M)
    return M.reshape(M.shape[:-2] + (3, 3, 3, 3))


def random_rotation(rng, size=None):
    """Uniformly distributed proper rotations (QR of a Gaussian matrix)."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    G = rng.standard_normal(shape + (3, 3))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diagonal(R, axis1=-2, axis2=-1))[..., None, :]
    flip = det(Q) < 0
    Q[flip, :, 0] *= -1.0
    return Q
