"""Which sources lie in the range of the critical operator.

Geometry (1, 2, 8) has critical radius r_e^2 / r_i = 4.  A source supported
on (a, b) with spectrum h_m = (1 + |m|)^-2 gives a series whose terms decay at rate
rho = (4 / a)^2: convergent beyond the critical radius, divergent inside it.
"""
import warnings

from indefla import (AngularSpectrum, AnnularGeometry, NotInRangeError, SourceSpec, critical_radius, range_check,
                     solve_critical)
from indefla.critical import TruncationWarning

# the support at the critical radius is undecidable by design; its warning is expected
warnings.simplefilter("ignore", TruncationWarning)

geom = AnnularGeometry(1.0, 2.0, 8.0)
print("critical radius:", critical_radius(geom))

spec = AngularSpectrum.parametric(1.0, 2.0, 1.0)
for a in (5.0, 4.0, 2.5):
    rep = range_check(geom, SourceSpec(a, a + 1.0, spec))
    print(f"a = {a}: verdict {rep.verdict:12s} rho = {rep.rho:.4f}  empirical ratio {rep.empirical_ratio:.4f}")

# any finite spectrum is in the range, whatever the support
finite = AngularSpectrum(explicit={m: 1.0 for m in range(-5, 6)})
print("finite spectrum at a = 2.5:", range_check(geom, SourceSpec(2.5, 3.0, finite)).verdict)

# an analytic spectrum (ratio s < 1) can compensate a support inside the critical radius
analytic = AngularSpectrum.parametric(1.0, 0.0, 0.5)
print("s = 0.5 at a = 2.5:", range_check(geom, SourceSpec(2.5, 3.0, analytic)).verdict)

try:
    solve_critical(geom, SourceSpec(2.5, 3.0, spec))
except NotInRangeError as exc:
    print("solve_critical refuses:", exc)
