"""Regularized strain-energy densities, stresses and consistent tangents.

The stored energy of the mixed formulation is

    W(F, chi, grad chi) = W0(F) + U(det F)
                          + H/2 |Cof F - chi|^2 + K/2 grad chi : grad chi

where ``chi`` is an auxiliary second-order field pulled towards ``Cof F`` by
the penalty modulus ``H`` and smoothed by the gradient modulus ``K``.
Three choices of the local energy ``W0`` are available (see :class:`Model`).

All functions broadcast over leading axes of their array arguments.
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import tensors as T
from .errors import NonPositiveJacobian

__all__ = [
    "Model", "MaterialParams", "PointState", "TangentBlocks", "well_tensors",
    "w0", "p0", "a0", "u_vol", "u_vol_d1", "u_vol_d2", "penalty_energy",
    "gradient_energy", "energy_total", "relative_stress",
    "higher_order_stress", "first_pk_stress", "tangent_blocks",
]


class Model(str, Enum):
    STVK = "stvk"
    STVK_NORMALIZED = "stvk_normalized"
    DOUBLE_WELL = "double_well"


@dataclass(frozen=True)
class MaterialParams:
    """Material constants (SI units).

    ``stvk_normalized`` ignores the Lame constants: its local energy is the
    dimensionless ``(C - I) : (C - I)``.
    """
    model: Model = Model.STVK_NORMALIZED
    lambda_lame: float = 0.0
    mu_lame: float = 0.0
    alpha: float = 0.0
    eps_well: float = 0.0
    H_chi: float = 1.0
    K_grad: float = 0.0
    K_vol: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if not self.H_chi > 0:
            raise ValueError("H_chi must be positive")
        if self.K_grad < 0 or self.K_vol < 0:
            raise ValueError("K_grad and K_vol must be non-negative")
        if self.model is Model.DOUBLE_WELL and not self.alpha > 0:
            raise ValueError("alpha must be positive for the double-well model")

    @property
    def internal_length(self):
        return float(np.sqrt(self.K_grad / self.H_chi))

    def with_(self, **changes):
        return replace(self, **changes)


class PointState(NamedTuple):
    F: np.ndarray
    chi: np.ndarray
    grad_chi: np.ndarray


class TangentBlocks(NamedTuple):
    """Second derivatives of the stored energy at a point.

    ``d_uu`` and ``d_uchi`` are fourth-order tensors; the chi-chi blocks are
    multiples of the identity: ``h_chi`` on the 9 chi components and
    ``k_grad`` on the 27 gradient components.
    """
    d_uu: np.ndarray
    d_uchi: np.ndarray
    h_chi: float
    k_grad: float

    @property
    def d_chichi(self):
        return self.h_chi * np.eye(9)

    @property
    def d_gradgrad(self):
        return self.k_grad * np.eye(27)


def well_tensors(eps):
    """Return ``(C1, C2, F1, F2)``: the two simple-shear wells."""
    F1 = np.eye(3)
    F1[0, 1] = eps
    F2 = np.eye(3)
    F2[0, 1] = -eps
    return F1.T @ F1, F2.T @ F2, F1, F2


_I4S = T.identity4(sym=True)
_IxI = T.dyad(T.IDENTITY, T.IDENTITY)


def _right_cauchy_green(F):
    return np.swapaxes(F, -1, -2) @ F


def _local_response(params, F, order):
    """Energy, 2nd PK stress and material tangent of ``W0`` written in C.

    Returns ``W`` (order 0), plus ``S = 2 dW/dC`` (order >= 1) and
    ``CC = 4 d2W/dC2`` (order 2).
    """
    F = np.asarray(F, dtype=float)
    C = _right_cauchy_green(F)
    model = params.model
    if model in (Model.STVK, Model.STVK_NORMALIZED):
        if model is Model.STVK:
            lam, mu = params.lambda_lame, params.mu_lame
        else:
            # (C-I):(C-I) = 4 E:E
            lam, mu = 0.0, 4.0
        E = 0.5 * (C - T.IDENTITY)
        trE = np.trace(E, axis1=-2, axis2=-1)
        W = 0.5 * lam * trE**2 + mu * T.ddot(E, E)
        if order == 0:
            return (W,)
        S = lam * trE[..., None, None] * T.IDENTITY + 2.0 * mu * E
        if order == 1:
            return W, S
        CC = np.broadcast_to(lam * _IxI + 2.0 * mu * _I4S, C.shape[:-2] + (3, 3, 3, 3))
        return W, S, CC
    C1, C2, _, _ = well_tensors(params.eps_well)
    A1 = C - C1
    A2 = C - C2
    d1 = T.ddot(A1, A1)
    d2 = T.ddot(A2, A2)
    a = params.alpha
    W = a * d1 * d2
    if order == 0:
        return (W,)
    S = 4.0 * a * (d2[..., None, None] * A1 + d1[..., None, None] * A2)
    if order == 1:
        return W, S
    CC = 8.0 * a * ((d1 + d2)[..., None, None, None, None] * _I4S
                    + 2.0 * (T.dyad(A1, A2) + T.dyad(A2, A1)))
    return W, S, CC


def w0(params, F):
    """Local (non-regularized) stored energy density."""
    return _local_response(params, F, 0)[0]


def p0(params, F):
    """First Piola-Kirchhoff stress of ``W0``: ``P0 = F S``."""
    _, S = _local_response(params, F, 1)
    return np.asarray(F, dtype=float) @ S


def a0(params, F):
    """First elasticity tensor ``dP0/dF`` of the local energy."""
    F = np.asarray(F, dtype=float)
    _, S, CC = _local_response(params, F, 2)
    geo = np.einsum("ik,...jl->...ijkl", T.IDENTITY, S)
    mat = np.einsum("...im,...mjnl,...kn->...ijkl", F, CC, F, optimize=True)
    return geo + mat


def _check_J(J):
    J = np.asarray(J, dtype=float)
    bad = ~(J > 0)
    if np.any(bad):
        idx = np.argwhere(bad)[0] if J.ndim else None
        raise NonPositiveJacobian(
            f"non-positive Jacobian det F = {J[tuple(idx)] if idx is not None else float(J)!r}",
            where=None if idx is None else tuple(int(i) for i in idx))
    return J


def u_vol(params, J):
    """Volumetric energy ``U(J) = K_vol/2 (ln J)^2``."""
    J = _check_J(J)
    return 0.5 * params.K_vol * np.log(J) ** 2


def u_vol_d1(params, J):
    J = _check_J(J)
    return params.K_vol * np.log(J) / J


def u_vol_d2(params, J):
    J = _check_J(J)
    return params.K_vol * (1.0 - np.log(J)) / J**2


def penalty_energy(params, F, chi):
    D = T.cofactor(F) - np.asarray(chi, dtype=float)
    return 0.5 * params.H_chi * T.ddot(D, D)


def gradient_energy(params, grad_chi):
    G = np.asarray(grad_chi, dtype=float)
    return 0.5 * params.K_grad * np.einsum("...ijk,...ijk->...", G, G)


def energy_total(params, state):
    """Stored energy of the regularized model at one or many points.

    Raises :class:`NonPositiveJacobian` when ``det F <= 0``; the solver
    treats that as ``+inf``.
    """
    F, chi, grad_chi = state
    J = T.det(F)
    return (w0(params, F) + u_vol(params, J) + penalty_energy(params, F, chi)
            + gradient_energy(params, grad_chi))


def relative_stress(params, F, chi):
    """``S_m = H (chi - Cof F)``."""
    return params.H_chi * (np.asarray(chi, dtype=float) - T.cofactor(F))


def higher_order_stress(params, grad_chi):
    """``mu = K grad chi``."""
    return params.K_grad * np.asarray(grad_chi, dtype=float)


def first_pk_stress(params, F, chi):
    """``P = P0 + U'(J) Cof F - S_m x F``."""
    F = np.asarray(F, dtype=float)
    J = T.det(F)
    cof = T.cofactor(F)
    Sm = relative_stress(params, F, chi)
    return p0(params, F) + u_vol_d1(params, J)[..., None, None] * cof - T.cross(Sm, F)


def tangent_blocks(params, F, chi):
    """Consistent tangent of the stored energy.

    ``d_uu = A0 + U'' Cof F (x) Cof F + U' (F x) + H (F x)(F x)
    + H ((Cof F - chi) x)`` and ``d_uchi = -H (F x)``. This is the exact
    Hessian; it is checked against finite differences in the test-suite.
    """
    F = np.asarray(F, dtype=float)
    chi = np.asarray(chi, dtype=float)
    J = T.det(F)
    cof = T.cofactor(F)
    Fx = T.cross_fourth(F)
    H = params.H_chi
    d1 = u_vol_d1(params, J)[..., None, None, None, None]
    d2 = u_vol_d2(params, J)[..., None, None, None, None]
    d_uu = (a0(params, F)
            + d2 * T.dyad(cof, cof) + d1 * Fx
            + H * np.einsum("...ijmn,...mnkl->...ijkl", Fx, Fx, optimize=True)
            + H * T.cross_fourth(cof - chi))
    return TangentBlocks(d_uu, -H * Fx, H, params.K_grad)
