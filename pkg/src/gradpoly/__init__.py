"""Finite elements for gradient-polyconvex hyperelasticity.

The stored energy is regularized through an auxiliary field ``chi`` that is
pulled towards ``Cof F`` and smoothed by a gradient term, which allows plain
C0 elements (20-node bricks for ``u``, trilinear ``chi``). The package holds
the tensor algebra, material models, discretization, Newton solver and the
diagnostics used to study laminate microstructures.
"""
from . import analysis, assembly, materials, mesh, solver, tensors
from .assembly import Discretization, assemble, total_energy
from .config import RunConfig, parse_config, preset, serialize
from .errors import *  # noqa: F401,F403
from .materials import MaterialParams, Model
from .mesh import DofMap, generate_block
from .solver import SolverConfig, solve

__version__ = "0.1.0"
