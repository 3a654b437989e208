"""Anomalous localized resonance as the loss parameter delta goes to zero.

The regularized coefficient is 1 on the annulus and -(mu + i delta) outside.
With the source beyond the critical radius every region stays bounded.
Inside it, the annulus energy blows up like a power of 1/delta.
"""
import numpy as np

from indefla import AngularSpectrum, AnnularGeometry, SourceSpec, delta_sweep

geom = AnnularGeometry(1.0, 2.0, 8.0)
spec = AngularSpectrum.parametric(1.0, 1.0, 1.0)
deltas = np.logspace(-1, -5, 9)

for a in (5.0, 2.5):
    rep = delta_sweep(geom, 1.0, SourceSpec(a, a + 0.5, spec), deltas=deltas, m_max=64, workers=4)
    print(f"\nsource at a = {a}")
    print("   delta      inner      annulus      outer")
    for d, n in zip(rep.deltas, rep.norms):
        print(f"{d:8.0e} {n['inner']:10.4g} {n['annulus']:12.4g} {n['outer']:10.4g}")
    print("fitted exponents:", {k: round(v, 3) for k, v in rep.exponents.items()})
    print("bounded:", rep.bounded)
