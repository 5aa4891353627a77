"""
How the internal length selects the laminate
============================================

The gradient term acts on chi, and chi is tied to Cof F only through the
penalty ``H_chi |Cof F - chi|^2 / 2``. A stiff gradient therefore smooths the
displacement only if the penalty is strong enough to transmit it. With
``H_chi = 1e5`` (as in the double-well presets) the penalty is weak next to
the well curvature ``alpha ~ 1e9``, and the band pattern hardly depends on K.
With ``H_chi = 3e6`` increasing K removes the bands altogether.

Each run takes a few seconds on a 10 x 10 x 1 mesh. Run with
``python demos/internal_length_mechanism.py``.
"""
import numpy as np

from gradpoly.config import preset
from gradpoly.runner import run

# %%
for H in (1e5, 3e6):
    print(f"H_chi = {H:.0e}")
    for K in (1.0, 1e3, 1e4, 1e5, 1e6):
        cfg = preset("dw_grad_K10", mesh__nx=10, mesh__ny=10,
                     material__H_chi=H, material__K_grad=K)
        res = run(cfg, write=False)
        print(f"  K = {K:8.0e}  l = {np.sqrt(K / H):.3g}  bands = {res.bands.band_count}  "
              f"converged = {res.converged}")
