"""Finite-difference verification of stresses and tangents at random states."""
from typing import NamedTuple

import numpy as np

from . import materials as mat
from . import tensors as T

__all__ = ["TangentCheck", "random_state", "fd_gradient", "check_point", "check_tangents"]


class TangentCheck(NamedTuple):
    """Largest norm-wise relative errors over all sampled states."""
    P: float
    S_m: float
    mu: float
    D_uu: float
    D_uchi: float
    D_chichi: float
    D_gradgrad: float
    n_states: int

    @property
    def worst(self):
        return max(self[:7])

    def rows(self):
        return [(name, getattr(self, name)) for name in self._fields[:7]]


def random_state(rng, det_range=(0.2, 3.0), spread=0.4):
    """Random ``(F, chi, grad_chi)`` with ``det F`` inside ``det_range``."""
    while True:
        F = T.random_rotation(rng) @ (np.eye(3) + spread * rng.standard_normal((3, 3)))
        J = T.det(F)
        if det_range[0] <= J <= det_range[1]:
            break
    chi = T.cofactor(F) + 0.1 * rng.standard_normal((3, 3))
    G = rng.standard_normal((3, 3, 3))
    return mat.PointState(F, chi, G)


def fd_gradient(fun, x, h):
    """Central differences of ``fun`` (scalar or array valued) w.r.t. every entry of ``x``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        e = e.reshape(x.shape)
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2.0 * h))
    out = np.stack(cols, axis=-1)
    return out.reshape(np.shape(fun(x)) + x.shape)


def _rel(a, b):
    scale = max(np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / scale)


def check_point(params, state, h=1e-6, h_lin=1e-2):
    """Relative errors at one state, in :class:`TangentCheck` field order.

    Derivatives in ``F`` use the step ``h``. The energy is quadratic in
    ``chi`` and ``grad chi``, so central differences in those directions are
    exact for any step; the larger step ``h_lin`` keeps the round-off of a
    large local energy (double-well) from swamping them.
    """
    F, chi, G = state
    hF = h * max(1.0, np.linalg.norm(F))
    hc = h_lin * max(1.0, np.linalg.norm(chi))
    W = lambda F_, c_=chi, g_=G: float(mat.energy_total(params, (F_, c_, g_)))
    P_fd = fd_gradient(W, F, hF)
    Sm_fd = fd_gradient(lambda c: W(F, c), chi, hc)
    mu_fd = fd_gradient(lambda g: W(F, chi, g), G, hc)
    P = mat.first_pk_stress(params, F, chi)
    Sm = mat.relative_stress(params, F, chi)
    mu = mat.higher_order_stress(params, G)
    blocks = mat.tangent_blocks(params, F, chi)
    Duu_fd = fd_gradient(lambda F_: mat.first_pk_stress(params, F_, chi), F, hF)
    Duc_fd = fd_gradient(lambda c: mat.first_pk_stress(params, F, c), chi, hc)
    Dcc_fd = fd_gradient(lambda c: mat.relative_stress(params, F, c), chi, hc)
    Dgg_fd = fd_gradient(lambda g: mat.higher_order_stress(params, g), G, hc)
    Dcc = T.unpack4(blocks.d_chichi)
    Dgg = blocks.d_gradgrad.reshape(3, 3, 3, 3, 3, 3)
    errs = [_rel(P, P_fd), _rel(Sm, Sm_fd), _rel(mu, mu_fd) if params.K_grad > 0 else 0.0,
            _rel(blocks.d_uu, Duu_fd), _rel(blocks.d_uchi, Duc_fd), _rel(Dcc, Dcc_fd),
            _rel(Dgg, Dgg_fd) if params.K_grad > 0 else 0.0]
    return errs


def check_tangents(params, n_states=100, seed=0, h=1e-6, h_lin=1e-2, spread=None):
    """Compare analytic stresses and tangents with finite differences.

    Stresses are checked against differences of the energy, tangent blocks
    against differences of the stresses. ``spread`` scales the random
    stretch part of ``F``; it defaults to 0.4, and to 0.1 for the double-well
    model, whose energy grows like ``alpha |C|^4`` and would otherwise leave
    too few significant digits in energy differences.
    """
    if spread is None:
        spread = 0.1 if params.model is mat.Model.DOUBLE_WELL else 0.4
    rng = np.random.default_rng(seed)
    worst = np.zeros(7)
    for _ in range(n_states):
        state = random_state(rng, spread=spread)
        worst = np.maximum(worst, check_point(params, state, h, h_lin))
    return TangentCheck(*worst, n_states=n_states)
