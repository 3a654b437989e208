"""Closed-form mode solutions checked against an independent finite-difference solver.

The oracle discretizes the radial transmission problem directly with a
second-order scheme and knows nothing about DtN blocks or Poisson pieces.
"""
from indefla import AngularSpectrum, AnnularGeometry, RadialGrid, SourceSpec, fd_residual, solve_critical_mode
from indefla.core import Contrast
from indefla.oracle import convergence_study

geom = AnnularGeometry(1.0, 2.0, 8.0)

for mu, delta, m in ((2.0, 0.05, 2), (1.0, 0.01, 5)):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m))
    study = convergence_study(geom, Contrast(mu, delta), m, src, n_points=65, doublings=3)
    print(f"(mu, delta, m) = ({mu}, {delta}, {m}): self-convergence orders",
          [round(p, 3) for p in study["orders"]])

# the critical mode-3 solution on the oracle grid: second order away from the
# origin, first order at the node next to it (the stencil leaves A h for A r^3)
src = SourceSpec(5.0, 6.0, AngularSpectrum.single(3))
sol = solve_critical_mode(geom, 3, src)
for n in (128, 512, 2048):
    full = fd_residual(sol, 3, (-1.0, 1.0, -1.0), src, RadialGrid.for_problem(geom, src, n), geom)
    away = fd_residual(sol, 3, (-1.0, 1.0, -1.0), src, RadialGrid((1.0, 2.0, 5.0, 6.0, 8.0), n), geom)
    print(f"n = {n:4d}: residual on [0, R] {full:.3e}   on [r_i, R] {away:.3e}")
