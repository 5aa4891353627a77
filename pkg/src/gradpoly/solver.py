"""Incremental Newton-Raphson driver with step control.

Each load step prescribes displacement values on a set of boundary DOFs
(chi is never constrained) and iterates

    K dx = -r,   d <- d + s dx

where the step length ``s`` is halved while the trial state has
``det F <= 0`` somewhere (infinite energy) or raises the total energy.

Microstructure problems are saddle-prone, so by default the tangent is
factorized as a symmetric LDL^T without pivoting, whose pivots give the
inertia. If negative pivots appear, a diagonal shift ``K + tau diag|K|`` is
increased until the factor is positive definite (modified Newton), so that
every step is a descent direction. Near a stable solution no shift is
needed and the iteration is plain Newton.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .assembly import Constraints, apply_dirichlet
from .errors import LinearSolveFailure, NoConvergence

__all__ = [
    "SolverConfig", "StepRecord", "SolveReport", "Factorization",
    "factorize", "linear_solve", "load_program", "boundary_constraints",
    "perturb_initial", "newton_step", "solve", "BC_KINDS",
]

BC_KINDS = {
    "biaxial_affine": ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax"),
    "fixed_all": ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax"),
    "fixed_top_bottom": ("zmin", "zmax"),
}


@dataclass(frozen=True)
class SolverConfig:
    load_steps: int = 20
    newton_tol: float = 1e-8
    newton_abs_tol: float = 1e-10
    max_iters: int = 30
    perturbation_amplitude: float = None  # None -> 1e-4 x smallest element edge
    step_halving_max: int = 8
    seed: int = 0
    energy_rtol: float = 1e-10
    modified_newton: bool = True
    shift_max: float = 1e6

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.newton_abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.load_steps < 1 or self.max_iters < 1:
            raise ValueError("load_steps and max_iters must be >= 1")
        if self.perturbation_amplitude is not None and self.perturbation_amplitude < 0:
            raise ValueError("perturbation_amplitude must be >= 0")


@dataclass
class StepRecord:
    step: int
    iterations: int = 0
    residuals: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    shifts: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    converged: bool = False

    @property
    def energy(self):
        return self.energies[-1] if self.energies else np.nan


@dataclass
class SolveReport:
    steps: list
    d: np.ndarray
    snapshots: list = field(default_factory=list)

    @property
    def converged(self):
        return all(s.converged for s in self.steps)

    @property
    def energies(self):
        return [s.energy for s in self.steps]

    def rows(self):
        """``(step, iter, residual, energy)`` for every recorded iterate."""
        for s in self.steps:
            for k, (r, e) in enumerate(zip(s.residuals, s.energies)):
                yield s.step, k, r, e

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "iter", "residual", "energy"])
            for step, k, r, e in self.rows():
                w.writerow([step, k, repr(float(r)), repr(float(e))])


# ------------------------------------------------------------ linear algebra
class Factorization:
    """Sparse LU of a symmetric matrix with inertia when pivoting was symmetric."""

    def __init__(self, lu, n_negative):
        self.lu = lu
        self.n_negative = n_negative

    def solve(self, b):
        return self.lu.solve(b)


def factorize(matrix, symmetric=True):
    """Factorize ``matrix``; ``n_negative`` is ``None`` if inertia is unknown.

    With ``symmetric=True`` the factorization is ``P A P^T = L D L^T``-like
    (diagonal pivots only), which exposes the number of negative
    eigenvalues; it falls back to partial pivoting if a zero pivot occurs.
    """
    A = sp.csc_matrix(matrix)
    if A.shape[0] == 0:
        return Factorization(None, 0)
    if symmetric:
        try:
            lu = spl.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                          options=dict(SymmetricMode=True))
            diag = lu.U.diagonal()
            if np.all(lu.perm_r == lu.perm_c) and np.all(np.isfinite(diag)):
                return Factorization(lu, int(np.count_nonzero(diag < 0)))
        except RuntimeError:
            pass
    try:
        lu = spl.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise LinearSolveFailure(f"sparse factorization failed: {exc}") from None
    return Factorization(lu, None)


def _backward_error(A, x, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(A @ x - b) / (nb if nb > 0 else 1.0)


def linear_solve(system, factor=None, tol=1e-10):
    """Solve ``system.matrix @ x = system.rhs``.

    Raises :class:`LinearSolveFailure` on singular matrices or if the
    relative backward error exceeds ``tol`` after one refinement step.
    """
    A = sp.csr_matrix(system.matrix)
    b = np.asarray(system.rhs, dtype=float)
    if A.shape[0] == 0:
        return np.zeros(0)
    if factor is None:
        factor = factorize(A)
    x = factor.solve(b)
    if not np.all(np.isfinite(x)):
        raise LinearSolveFailure("non-finite solution (singular or badly scaled matrix)")
    err = _backward_error(A, x, b)
    if err > tol:
        x = x + factor.solve(b - A @ x)
        err = _backward_error(A, x, b)
    if err > tol:
        # diagonal pivoting can be unstable on indefinite matrices
        factor = factorize(A, symmetric=False)
        x = factor.solve(b)
        err = _backward_error(A, x, b)
    if not (err <= tol):
        raise LinearSolveFailure(f"backward error {err:.3e} exceeds {tol:.1e}")
    return x


# ------------------------------------------------------------ loading
def load_program(kind, total=0.0, steps=1):
    """Sequence of macroscopic deformation gradients, one per load step.

    ``biaxial``: ``diag(1 - t c, 1 - t c, 1)`` with ``t = k/steps`` and
    compression fraction ``c = total``. ``relaxation``: the identity at every
    step (boundary held, material left to relax).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if kind == "biaxial":
        out = []
        for k in range(1, steps + 1):
            s = 1.0 - total * k / steps
            out.append(np.diag([s, s, 1.0]))
        return out
    if kind == "relaxation":
        return [np.eye(3) for _ in range(steps)]
    raise ValueError(f"unknown load program {kind!r}")


def boundary_constraints(mesh, dofmap, bc_kind, F):
    """Target displacements ``u = (F - I) X`` on the faces of ``bc_kind``."""
    try:
        faces = BC_KINDS[bc_kind]
    except KeyError:
        raise ValueError(f"unknown boundary condition kind {bc_kind!r}") from None
    nodes = mesh.boundary_nodes(faces)
    values = mesh.nodes[nodes] @ (np.asarray(F) - np.eye(3)).T
    return Constraints(dofmap.u_dofs(nodes).ravel(), values.ravel())


def perturb_initial(fields, amplitude, seed, dofmap=None, fixed=()):
    """Add seeded uniform noise in ``[-amplitude, amplitude]`` to free u DOFs."""
    d = np.array(fields, dtype=float)
    if amplitude == 0:
        return d
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    n_u = dofmap.n_u if dofmap is not None else len(d)
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-amplitude, amplitude, n_u)
    noise[np.asarray(fixed, dtype=np.int64)[np.asarray(fixed, dtype=np.int64) < n_u]] = 0.0
    d[:n_u] += noise
    return d


# ------------------------------------------------------------ Newton
def _field_norms(r, free, n_u):
    ru = r[free[free < n_u]]
    rc = r[free[free >= n_u]]
    return np.linalg.norm(ru), np.linalg.norm(rc)


def _shifted_direction(red, config, state):
    """Newton direction, shifted to a descent direction if the tangent is indefinite."""
    K = red.matrix
    fac = factorize(K)
    if not config.modified_newton or fac.n_negative == 0:
        return linear_solve(red, fac), 0.0
    if fac.n_negative is None:
        return linear_solve(red, fac), 0.0
    D = sp.diags(np.abs(K.diagonal()) + 1e-300)
    tau = max(state.get("tau", 1e-4) / 4.0, 1e-8)
    while tau <= config.shift_max:
        Ks = (K + tau * D).tocsr()
        fac = factorize(Ks)
        if fac.n_negative == 0:
            state["tau"] = tau
            return linear_solve(red._replace(matrix=Ks), fac), tau
        tau *= 4.0
    raise LinearSolveFailure("could not shift the tangent to positive definiteness")


def newton_step(disc, d, targets, config, reference=None, record=None):
    """Run the Newton loop of one load step.

    ``targets`` are the prescribed values (a :class:`Constraints`) of the
    constrained DOFs at the end of the step. Returns ``(d, record)``.

    Raises
    ------
    NoConvergence
        If the residual criterion is not met within ``config.max_iters``.
    """
    record = record if record is not None else StepRecord(step=0)
    d = np.array(d, dtype=float)
    n_u = disc.dofmap.n_u
    fixed = np.asarray(targets.dofs, dtype=np.int64)
    increments = np.asarray(targets.values, dtype=float) - d[fixed]
    energy = disc.energy(d)
    ref = tuple(reference) if reference is not None else None
    shift_state = {}
    for it in range(config.max_iters + 1):
        system = disc.system(d)
        red = apply_dirichlet(system, Constraints(fixed, increments))
        nu, nc = _field_norms(system.rhs, red.free, n_u)
        record.residuals.append(float(np.hypot(nu, nc)))
        record.energies.append(float(energy))
        if not np.any(increments):
            # reference scales: largest residual seen in this step, per field
            ref = (max(nu, ref[0]), max(nc, ref[1])) if ref is not None else (nu, nc)
            ok_u = nu <= config.newton_tol * ref[0] or nu <= config.newton_abs_tol
            ok_c = nc <= config.newton_tol * ref[1] or nc <= config.newton_abs_tol
            if ok_u and ok_c:
                record.converged = True
                record.iterations = it
                return d, record
        if it == config.max_iters:
            break
        x, tau = _shifted_direction(red, config, shift_state)
        dx = red.expand(x)
        record.shifts.append(tau)
        prescribed = np.any(increments)
        s = 1.0
        for halving in range(config.step_halving_max + 1):
            trial = d + s * dx
            e_trial = disc.energy(trial)
            if np.isfinite(e_trial) and (
                    prescribed or e_trial <= energy + config.energy_rtol * max(abs(energy), 1.0)):
                break
            s *= 0.5
        else:
            halving = config.step_halving_max
            if not np.isfinite(e_trial):
                raise NoConvergence("step halving could not restore det F > 0")
        record.halvings.append(halving)
        if prescribed and s < 1.0:
            # only part of the boundary increment applied; keep the rest for later
            increments = (1.0 - s) * increments
        else:
            increments = np.zeros_like(increments)
        d = trial
        energy = e_trial
    record.iterations = config.max_iters
    raise NoConvergence(f"Newton did not converge in {config.max_iters} iterations "
                        f"(residual {record.residuals[-1]:.3e})")


def solve(disc, bc_kind, program, config=None, d0=None, keep_snapshots=False,
          raise_on_failure=True, log=None):
    """Drive ``disc`` through the deformation gradients of ``program``.

    The first load step starts from ``d0`` (default: undeformed, chi = I)
    with a seeded random perturbation of the free displacement DOFs.
    """
    config = config or SolverConfig()
    mesh, dofmap = disc.mesh, disc.dofmap
    d = dofmap.initial() if d0 is None else np.array(d0, dtype=float)
    amp = config.perturbation_amplitude
    if amp is None:
        amp = 1e-4 * min(mesh.element_size)
    steps, snaps = [], []
    for k, F in enumerate(program, start=1):
        targets = boundary_constraints(mesh, dofmap, bc_kind, F)
        if k == 1 and amp > 0:
            d = perturb_initial(d, amp, config.seed, dofmap, targets.dofs)
        rec = StepRecord(step=k)
        try:
            d, rec = newton_step(disc, d, targets, config, record=rec)
        except NoConvergence:
            steps.append(rec)
            if raise_on_failure:
                raise
            break
        steps.append(rec)
        if keep_snapshots:
            snaps.append(d.copy())
        if log is not None:
            log(f"step {k}: {rec.iterations} iterations, energy {rec.energy:.10g}")
    return SolveReport(steps, d, snaps)
