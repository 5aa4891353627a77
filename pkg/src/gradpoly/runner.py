"""End-to-end experiment pipeline: configuration in, report and files out."""
import os
from typing import NamedTuple

from .analysis import laminate_stats, probe_line
from .assembly import Discretization
from .export import export_vtk, snapshot, write_cells_csv
from .materials import Model
from .mesh import gauss_rule, generate_block
from .solver import load_program, solve

__all__ = ["RunResult", "build", "run", "band_statistics", "F12_NOISE"]

# F12 below this level is round-off: no shear laminate
F12_NOISE = 1e-6


class RunResult(NamedTuple):
    config: object
    discretization: Discretization
    report: object
    snapshot: object
    bands: object
    paths: dict

    @property
    def converged(self):
        return self.report.converged


def build(config):
    """Mesh and discretization of a :class:`~gradpoly.config.RunConfig`."""
    mesh = generate_block(*config.lengths, *config.divisions)
    return Discretization(mesh, config.material, gauss_rule(config.quadrature))


def band_statistics(mesh, snap, params, axis=1):
    """Laminate statistics on the centre line parallel to ``axis``.

    Double-well states are measured on ``C_eq`` (threshold 1/2), all other
    models on ``F12`` (threshold at round-off level).
    """
    ids, pos = probe_line(mesh, axis=axis)
    if params.model is Model.DOUBLE_WELL:
        field, thr = snap.Ceq[ids], 0.5
    else:
        field, thr = snap.F[ids, 0, 1], F12_NOISE
    stats = laminate_stats(field, pos, threshold=thr, length=mesh.lengths[axis])
    return stats._replace(f12_profile=snap.F[ids, 0, 1])


def run(config, write=True, log=None, raise_on_failure=False):
    """Solve the experiment of ``config``; write VTK and CSV when ``write``."""
    disc = build(config)
    program = load_program(config.load_kind, config.load_total, config.load_steps)
    report = solve(disc, config.bc_kind, program, config.solver,
                   raise_on_failure=raise_on_failure, log=log)
    snap = snapshot(disc, report.d)
    bands = band_statistics(disc.mesh, snap, config.material)
    paths = {}
    if write:
        os.makedirs(config.output_dir, exist_ok=True)
        stem = os.path.join(config.output_dir, config.output_prefix)
        paths["vtk"] = export_vtk(disc.mesh, snap, stem + ".vtk", title=config.output_prefix,
                                  fields=config.output_fields)
        paths["report"] = stem + "_report.csv"
        report.to_csv(paths["report"])
        paths["cells"] = write_cells_csv(disc.mesh, snap, stem + "_cells.csv")
    return RunResult(config, disc, report, snap, bands, paths)
