"""
Why a non-rank-one-convex energy forms laminates
=================================================

The normalized Saint Venant-Kirchhoff energy ``W0``
is not rank-one convex under strong biaxial compression. This script shows
the loss of convexity along ``e1 (x) e2`` and the energy a laminate saves
against the homogeneous state, first analytically and then on a finite
element interpolant.

Run with ``python demos/laminate_energy_gap.py``.
"""
import numpy as np

from gradpoly import analysis as A
from gradpoly import materials as M
from gradpoly.mesh import generate_block

# %%
# Rank-one probe along e1 (x) e2 at F = diag(eps, eps, 1).
# The value changes sign at eps = sqrt(2)/2.
for eps in (0.5, 0.6, 0.7, np.sqrt(0.5), 0.75, 0.7825):
    res = A.rank_one_probe_stvk(np.diag([eps, eps, 1.0]), [1, 0, 0], [0, 1, 0])
    print(f"eps = {eps:.4f}: probe {res.h_second_derivative:+.4f}"
          f"{'  (not rank-one convex)' if res.violating else ''}")

# %%
# Below sqrt(2)/2 the homogeneous state splits into two rank-one connected
# gradients F+ and F- with equal volume fractions. Both have the same energy,
# lower than the homogeneous one by (2 eps^2 - 1)^2.
eps = 0.6
F, Fp, Fm = A.laminate_gradients(eps)
w_hom, w_lam, gap = A.stvk_laminate_gap(eps)
print(f"\neps = {eps}: W_hom = {w_hom:.4f}, W(F+) = W(F-) = {w_lam:.4f}, gap = {gap:.4f}")
print("F+ - F- =\n", Fp - Fm)

# %%
# The same laminate on Hex20 meshes of the unit cube, one band per element
# layer. The boundary keeps the affine data, which costs energy in a layer
# one element thick, so the saving only shows up once the bands are fine.
norm = M.MaterialParams("stvk_normalized")
for n in (4, 8, 16, 32):
    m = generate_block(1, 1, 1, n, n, n)
    d = A.laminate_interpolant(m, eps)
    e_lam = A.local_energy(m, d[:3 * m.n_nodes], norm)
    e_hom = A.local_energy(m, m.nodes @ (F - np.eye(3)).T, norm)
    print(f"n = {n:2d}: E_lam - E_hom = {e_lam - e_hom:+.4f}   (limit {-gap:+.4f})")
