"""Field snapshots and their VTK / CSV output.

VTK files are legacy ASCII 2.0 ``UNSTRUCTURED_GRID`` with quadratic
hexahedra (cell type 25, node order as in :mod:`gradpoly.mesh`). Point data:
vector ``displacement``. Cell data (element averages): scalars ``F11``,
``F12``, ``detF``, ``Ceq`` (clamped to ``[0, 1]``) and ``Smnorm`` (the
Frobenius norm of the relative stress). Numbers are written with 17
significant digits, so identical states give byte-identical files.

Cell CSV columns: ``element, x, y, z, F11, F12, detF, Ceq, Smnorm``
(centroid coordinates).
"""
import csv
from typing import NamedTuple

import numpy as np

from . import materials as mat
from . import tensors as T
from .analysis import c_eq

__all__ = ["FieldSnapshot", "snapshot", "export_vtk", "read_vtk_summary",
           "write_cells_csv", "CELL_FIELDS", "VTK_HEXA20"]

VTK_HEXA20 = 25
CELL_FIELDS = ("F11", "F12", "detF", "Ceq", "Smnorm")


class FieldSnapshot(NamedTuple):
    displacement: np.ndarray   # (n_nodes, 3)
    chi: np.ndarray            # (n_corner_nodes, 3, 3)
    F: np.ndarray              # (n_elements, 3, 3), element averages
    detF: np.ndarray           # (n_elements,)
    Ceq: np.ndarray            # (n_elements,)
    Smnorm: np.ndarray         # (n_elements,)

    def cell_field(self, name):
        if name == "F11":
            return self.F[:, 0, 0]
        if name == "F12":
            return self.F[:, 0, 1]
        return getattr(self, name)


def snapshot(disc, d):
    """Element-averaged post-processing fields of the state ``d``."""
    F, chi, _ = disc.kinematics(d)
    w = disc.wdet / disc.wdet.sum(axis=1, keepdims=True)
    avg = lambda q: np.einsum("eq,eq...->e...", w, q)
    C = np.swapaxes(F, -1, -2) @ F
    Sm = mat.relative_stress(disc.params, F, chi)
    u, chi_nodes = disc.dofmap.split(d)
    return FieldSnapshot(
        displacement=u.copy(), chi=chi_nodes.copy(), F=avg(F), detF=avg(T.det(F)),
        Ceq=np.clip(avg(c_eq(C, disc.params.eps_well)), 0.0, 1.0),
        Smnorm=avg(np.sqrt(T.ddot(Sm, Sm))))


def _rows(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in a)


def export_vtk(mesh, snap, path, title="gradpoly", fields=None):
    """Write ``snap`` on ``mesh`` as a legacy VTK file.

    ``fields`` selects output names (``displacement`` and any of
    :data:`CELL_FIELDS`); all by default.
    """
    fields = tuple(fields) if fields is not None else ("displacement",) + CELL_FIELDS
    n, E = mesh.n_nodes, mesh.n_elements
    if snap.displacement.shape != (n, 3) or len(snap.detF) != E:
        raise ValueError("snapshot does not match the mesh")
    parts = [
        "# vtk DataFile Version 2.0",
        title.splitlines()[0][:255] if title else "gradpoly",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
        _rows(mesh.nodes),
        f"CELLS {E} {E * 21}",
        "\n".join("20 " + " ".join(str(int(i)) for i in el) for el in mesh.elements),
        f"CELL_TYPES {E}",
        "\n".join([str(VTK_HEXA20)] * E),
    ]
    if "displacement" in fields:
        parts += [f"POINT_DATA {n}", "VECTORS displacement double", _rows(snap.displacement)]
    cell = [f for f in CELL_FIELDS if f in fields]
    if cell:
        parts.append(f"CELL_DATA {E}")
        for name in cell:
            values = snap.cell_field(name)
            if name == "Ceq":
                values = np.clip(values, 0.0, 1.0)
            parts += [f"SCALARS {name} double 1", "LOOKUP_TABLE default",
                      _rows(np.reshape(values, (-1, 1)))]
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path!s}: {exc.strerror}") from exc
    return path


def read_vtk_summary(path):
    """Counts and array names of a legacy VTK file written by :func:`export_vtk`."""
    out = {"points": None, "cells": None, "cell_types": [], "point_data": [], "cell_data": []}
    with open(path, encoding="ascii") as fh:
        lines = fh.read().split("\n")
    i = 0
    section = None
    while i < len(lines):
        tok = lines[i].split()
        if not tok:
            i += 1
            continue
        if tok[0] == "POINTS":
            out["points"] = int(tok[1])
            i += 1 + out["points"]
            continue
        if tok[0] == "CELLS":
            out["cells"] = int(tok[1])
            i += 1 + out["cells"]
            continue
        if tok[0] == "CELL_TYPES":
            k = int(tok[1])
            out["cell_types"] = [int(v) for v in lines[i + 1:i + 1 + k]]
            i += 1 + k
            continue
        if tok[0] in ("POINT_DATA", "CELL_DATA"):
            section = "point_data" if tok[0] == "POINT_DATA" else "cell_data"
        elif tok[0] in ("VECTORS", "SCALARS") and section:
            out[section].append(tok[1])
        i += 1
    return out


def write_cells_csv(mesh, snap, path):
    cen = mesh.centroids()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "x", "y", "z"] + list(CELL_FIELDS))
        for e in range(mesh.n_elements):
            vals = [snap.cell_field(name)[e] for name in CELL_FIELDS]
            w.writerow([e] + [f"{v:.17g}" for v in cen[e]] + [f"{v:.17g}" for v in vals])
    return path
