"""Mode blocks of the Dirichlet-to-Neumann maps on two circles.

For the geometry (1, 2, 4) the first-mode blocks are small rational
matrices.  At mu = 1 the difference D_m = B_m - C_m stays invertible for
every mode, even far past the point where its entries leave the double range.
"""
import numpy as np

from indefla import (AnnularGeometry, difference_mode, exterior_dtn_mode, interior_dtn_mode,
                     invert_difference_mode, theta_eigenvalues)

geom = AnnularGeometry(1.0, 2.0, 4.0)
np.set_printoptions(precision=6, suppress=True)

print("interior block B_1\n", interior_dtn_mode(geom, 1).to_array())
print("exterior block C_1\n", exterior_dtn_mode(geom, 1).to_array())
print("difference D_1 at mu = 1\n", difference_mode(geom, 1.0, 1).to_array())
print("its inverse\n", invert_difference_mode(geom, 1.0, 1).to_array())

# weighted symmetry: r_i * (.)_12 = r_e * (.)_21
D = difference_mode(geom, 1.0, 7).to_array()
print("\nmode 7: r_i D_12 =", geom.r_i * D[0, 1], " r_e D_21 =", geom.r_e * D[1, 0])

# entries of the inverse grow like (r_e/r_i)^m; scaled arithmetic keeps them exact
for m in (10, 200, 2000):
    Dinv = invert_difference_mode(geom, 1.0, m)
    print(f"m = {m:5d}: log2 |Dinv_21| = {Dinv[1, 0].log2_abs():10.1f}")

# Theta_m = Lambda D_m^-1 Lambda decays geometrically at mu = 1
canonical = AnnularGeometry(1.0, 2.0, 8.0)
for m in (5, 15, 30):
    print(f"m = {m:2d}: eig Theta_m =", theta_eigenvalues(canonical, 1.0, m))
