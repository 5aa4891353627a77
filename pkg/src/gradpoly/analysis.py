"""Diagnostics for laminate microstructures.

* closed-form rank-one probe and laminate energies of the normalized
  Saint Venant-Kirchhoff energy ``W0 = (C - I) : (C - I)`` under biaxial
  compression ``F = diag(eps, eps, 1)``;
* the equivalent strain ``C_eq`` locating ``C`` between the two wells of the
  double-well energy;
* band counting along a probe line and energy comparison of two states.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import materials as mat
from . import tensors as T
from .assembly import Discretization, _geometry, _kinematics
from .errors import IncomparableRuns, LaminateUndefined
from .mesh import DofMap, gauss_rule

__all__ = [
    "ProbeResult", "LaminateStats", "RunState", "rank_one_probe_stvk",
    "rank_one_second_derivative", "stvk_laminate_gap", "laminate_gradients",
    "c_eq", "c_eq_field", "cell_average", "probe_line", "laminate_stats",
    "energy_compare", "laminate_interpolant", "local_energy",
]


class ProbeResult(NamedTuple):
    h_second_derivative: float
    violating: bool


class LaminateStats(NamedTuple):
    band_count: int
    mean_band_width: float
    f12_profile: np.ndarray


@dataclass(frozen=True, eq=False)
class RunState:
    """A converged (or trial) state together with what defines its energy."""
    mesh: object
    params: mat.MaterialParams
    d: np.ndarray
    bc_kind: str = None


# ------------------------------------------------------------ StVK analytics
def rank_one_probe_stvk(F, a, b):
    """Rank-one convexity probe of the normalized StVK energy.

    Evaluates ``|a|^2 C : b(x)b + |G|^2 + G : G^T - |a|^2 |b|^2`` with
    ``G = F^T a (x) b``. This equals ``h''(0) / 4`` for
    ``h(t) = W0(F + t a (x) b)``, so a negative value means that ``W0`` is
    not convex along ``a (x) b`` at ``F``.
    """
    F = np.asarray(F, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = F.T @ F
    G = np.outer(F.T @ a, b)
    aa, bb = a @ a, b @ b
    value = float(aa * (b @ C @ b) + np.sum(G * G) + np.sum(G * G.T) - aa * bb)
    return ProbeResult(value, value < 0)


def rank_one_second_derivative(params, F, a, b, h=1e-4):
    """Central second difference of ``t -> w0(F + t a (x) b)`` at ``t = 0``."""
    D = np.outer(a, b)
    F = np.asarray(F, dtype=float)
    w = [float(mat.w0(params, F + s * h * D)) for s in (-1.0, 0.0, 1.0)]
    return (w[0] - 2.0 * w[1] + w[2]) / h**2


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if 1.0 - 2.0 * eps**2 < -1e-14:
        raise LaminateUndefined(
            f"eps = {eps!r} exceeds sqrt(2)/2: the laminate gradients are not real")


def laminate_gradients(eps):
    """``(F, F_plus, F_minus)``: the homogeneous state and its rank-one split.

    ``F_pm = F +- sqrt(1 - 2 eps^2) e1 (x) e2`` with ``F = diag(eps, eps, 1)``.
    """
    _check_eps(eps)
    F = np.diag([eps, eps, 1.0])
    s = np.sqrt(max(1.0 - 2.0 * eps**2, 0.0))
    Fp, Fm = F.copy(), F.copy()
    Fp[0, 1] = s
    Fm[0, 1] = -s
    return F, Fp, Fm


def stvk_laminate_gap(eps):
    """``(W_hom, W_lam, gap)`` for the normalized StVK energy.

    ``W_hom = 2 - 4 eps^2 + 2 eps^4``, ``W_lam = 1 - 2 eps^4`` (both laminate
    gradients have the same energy) and ``gap = (2 eps^2 - 1)^2``.

    Raises
    ------
    LaminateUndefined
        If ``eps > sqrt(2)/2``.
    """
    _check_eps(eps)
    e2 = eps * eps
    w_hom = 2.0 - 4.0 * e2 + 2.0 * e2 * e2
    w_lam = 1.0 - 2.0 * e2 * e2
    return w_hom, w_lam, (2.0 * e2 - 1.0) ** 2


# ------------------------------------------------------------ double well
def c_eq(C, eps_well):
    """Equivalent strain ``|C - C1|^2 / (|C - C1|^2 + |C - C2|^2)`` in ``[0, 1]``.

    Returns 1/2 where both distances vanish.
    """
    C1, C2, _, _ = mat.well_tensors(eps_well)
    d1 = T.ddot(C - C1, C - C1)
    d2 = T.ddot(C - C2, C - C2)
    den = d1 + d2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, d1 / np.where(den > 0, den, 1.0), 0.5)
    return np.clip(out, 0.0, 1.0)


def _deformation_gradients(mesh, d_u, rule=None):
    rule = gauss_rule(3) if rule is None else rule
    X = mesh.nodes[mesh.elements]
    _, Nc, Gu, Gc, wdet = _geometry(X, rule)
    u = np.asarray(d_u, dtype=float).reshape(-1, 3)[:mesh.n_nodes]
    ce = np.zeros((mesh.n_elements, 8, 3, 3))
    F, _, _ = _kinematics(u[mesh.elements], ce, Nc, Gu, Gc)
    return F, wdet


def c_eq_field(mesh, d_u, params, rule=None):
    """``C_eq`` at every quadrature point, shape ``(n_elements, n_points)``.

    ``d_u`` holds the nodal displacements (``(n_nodes, 3)`` or flat).
    """
    F, _ = _deformation_gradients(mesh, d_u, rule)
    return c_eq(np.swapaxes(F, -1, -2) @ F, params.eps_well)


def cell_average(mesh, values, rule=None):
    """Volume average over each element of a quadrature-point field ``(E, Q, ...)``."""
    rule = gauss_rule(3) if rule is None else rule
    _, _, _, _, wdet = _geometry(mesh.nodes[mesh.elements], rule)
    w = wdet / wdet.sum(axis=1, keepdims=True)
    return np.einsum("eq,eq...->e...", w, values)


def probe_line(mesh, axis=1, at=None):
    """Elements along a straight line parallel to ``axis``.

    The line passes through the block centre (or through ``at``, a point);
    among elements the one whose centroid is nearest the line is taken in
    every layer. Returns ``(element_ids, positions)`` sorted by position.
    """
    cen = mesh.centroids()
    at = 0.5 * np.asarray(mesh.lengths) if at is None else np.asarray(at, dtype=float)
    tol = 1e-9 * max(mesh.lengths)
    keep = np.ones(len(cen), dtype=bool)
    for k in range(3):
        if k == axis:
            continue
        # nearest row of centroids; ties go to the smaller coordinate
        rows = np.unique(np.round(cen[:, k] / tol) * tol)
        target = rows[np.argmin(np.abs(rows - at[k]))]
        keep &= np.abs(cen[:, k] - target) < 2 * tol
    ids = np.flatnonzero(keep)
    order = np.argsort(cen[ids, axis], kind="stable")
    return ids[order], cen[ids[order], axis]


def laminate_stats(field, positions=None, threshold=0.5, length=None, tol=1e-6):
    """Count laminate bands in a profile sampled along a probe line.

    A band is one period of the alternation: ``band_count`` is the number of
    threshold crossings divided by two, rounded up. ``mean_band_width`` is
    twice the mean distance between successive crossings (the whole line
    length for a single crossing, ``nan`` without crossings).

    Parameters
    ----------
    field : array_like
        Samples ordered along the line.
    positions : array_like, optional
        Sample coordinates along the line; defaults to ``0, 1, 2, ...``.
    threshold : float
        Level whose crossings are counted.
    length : float, optional
        Probe-line length, used when there is a single crossing.
    tol : float
        Dead band: samples within ``tol`` of ``threshold`` belong to neither
        phase, so round-off noise around a homogeneous state is not counted.
    """
    f = np.asarray(field, dtype=float).ravel()
    x = np.arange(len(f), dtype=float) if positions is None else np.asarray(positions, dtype=float)
    phase = np.where(f > threshold + tol, 1, np.where(f < threshold - tol, -1, 0))
    defined = np.flatnonzero(phase)
    change = np.flatnonzero(phase[defined[1:]] != phase[defined[:-1]])
    n = len(change)
    if n == 0:
        return LaminateStats(0, float("nan"), f)
    i0, i1 = defined[change], defined[change + 1]
    f0, f1 = f[i0], f[i1]
    t = (threshold - f0) / (f1 - f0)
    xc = x[i0] + t * (x[i1] - x[i0])
    if n >= 2:
        width = 2.0 * float(np.mean(np.diff(xc)))
    else:
        width = float(length) if length is not None else float(x[-1] - x[0])
    return LaminateStats(int(-(-n // 2)), width, f)


# ------------------------------------------------------------ energies
def local_energy(mesh, d_u, params, rule=None):
    """``integral of W0(F)``: the local energy only, no penalty or gradient terms."""
    F, wdet = _deformation_gradients(mesh, d_u, rule)
    return float(np.sum(mat.w0(params, F) * wdet))


def energy_compare(run_a, run_b, local_only=False):
    """Signed energy difference ``E(run_a) - E(run_b)``.

    With ``local_only`` only ``integral of W0`` is compared (the chi fields
    are ignored).

    Raises
    ------
    IncomparableRuns
        If the runs differ in mesh, material or boundary conditions.
    """
    ma, mb = run_a.mesh, run_b.mesh
    same_mesh = (ma is mb) or (ma.nodes.shape == mb.nodes.shape
                               and np.array_equal(ma.elements, mb.elements)
                               and np.allclose(ma.nodes, mb.nodes, rtol=0, atol=1e-12))
    if not same_mesh:
        raise IncomparableRuns("runs are on different meshes")
    if run_a.params != run_b.params:
        raise IncomparableRuns("runs use different material parameters")
    if run_a.bc_kind != run_b.bc_kind:
        raise IncomparableRuns(f"boundary conditions differ: {run_a.bc_kind!r} vs {run_b.bc_kind!r}")
    if local_only:
        n_u = 3 * ma.n_nodes
        ea = local_energy(ma, np.asarray(run_a.d)[:n_u], run_a.params)
        eb = local_energy(mb, np.asarray(run_b.d)[:n_u], run_b.params)
        return ea - eb
    disc = Discretization(ma, run_a.params)
    return disc.energy(run_a.d) - disc.energy(run_b.d)


def laminate_interpolant(mesh, eps, layer_width=None, affine_boundary=True):
    """Nodal interpolant of the ``F_+ / F_-`` laminate of the biaxial state.

    ``y(X) = F X + s phi(X2) e1`` where ``phi`` is the zig-zag with slope
    ``+-1`` switching every ``layer_width`` (default: the element size in
    ``y``), so each layer carries one laminate gradient. With
    ``affine_boundary`` the boundary nodes keep the affine data ``F X``.
    Returns the full DOF vector with ``chi = Cof F`` of the mean gradient.
    """
    F, _, _ = laminate_gradients(eps)
    s = np.sqrt(max(1.0 - 2.0 * eps**2, 0.0))
    w = mesh.element_size[1] if layer_width is None else float(layer_width)
    X = mesh.nodes
    k = X[:, 1] / w
    # zig-zag: distance to the nearest even multiple of w
    phi = w * np.abs(k - 2.0 * np.round(k / 2.0))
    u = X @ (F - np.eye(3)).T
    u[:, 0] += s * phi
    if affine_boundary:
        b = mesh.boundary_nodes()
        u[b] = X[b] @ (F - np.eye(3)).T
    dm = DofMap(mesh)
    chi = np.tile(T.cofactor(F), (dm.n_corner, 1, 1))
    return dm.join(u, chi)
