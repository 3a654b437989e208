"""Mode-block diagnostics that separate mu = 1 from mu != 1.

At mu = 1 the eigenvalues of Theta_m decay geometrically in m, the numerical
fingerprint of an essential spectrum reduced to zero.  Away from mu = 1 the
eigenvalues of Psi_m grow like m^2 with the sign of 1 - mu.
"""
import numpy as np

from indefla import AnnularGeometry, classify_contrast
from indefla.spectral import decay_fit, psi_eigenvalues, theta_log_max

geom = AnnularGeometry(1.0, 2.0, 8.0)

fit = decay_fit(geom, 1.0, (5, 60))
print(f"mu = 1: ln|lambda_max(Theta_m)| ~ {fit['slope']:.4f} m + {fit['intercept']:.3f}"
      f"  (relative residual {fit['relative']:.3f})")
for m in (5, 10, 20, 40, 60):
    print(f"   m = {m:2d}  ln|lambda_max| = {theta_log_max(geom, 1.0, m):9.3f}")

for mu in (0.5, 2.0, 3.0):
    cls = classify_contrast(geom, mu)
    lam = np.array(psi_eigenvalues(geom, mu, 60)) / 60 ** 2
    print(f"\nmu = {mu}: regime {cls.regime}, Psi_60 / 60^2 = {lam}, fitted limits {cls.growth_constants}")
    print(f"   expected limits (1 - mu)/(2 r_i^2), (1 - mu)/(2 r_e^2) = {(1 - mu) / 2:.4f}, {(1 - mu) / 8:.4f}")
