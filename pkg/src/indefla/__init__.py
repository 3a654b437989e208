"""Mode-exact solver and diagnostics for the indefinite Laplacian on concentric circles."""

__version__ = "0.1.0"

from .core import (DEFAULT_M_MAX, AnnularGeometry, Contrast, ContrastError, GeometryError, IndeflaError,
                   ScaledValue, critical_radius)
from .critical import (AngularSpectrum, MembershipReport, NotInRangeError, SourceError, SourceSpec,
                       TruncationWarning, neumann_trace_re, range_check, solve_critical, solve_critical_mode,
                       synthesize)
from .dtn import (KINDS, ModeMatrix, SingularModeError, critical_inverse_closed_form, difference_mode,
                  exterior_dtn_mode, interior_dtn_mode, invert_difference_mode, lambda_block, psi_mode,
                  theta_mode)
from .oracle import RadialGrid, SingularDiscreteSystemError, fd_residual, fd_transmission_solve
from .poisson import (ModeSolution, OutOfIntervalError, RadialPiece, TraceModeVector, evaluate_radial,
                      exterior_poisson_mode, interior_poisson_mode)
from .regularized import DeltaSweepReport, SingularSystemError, delta_sweep, h1_norms, solve_regularized_mode
from .spectral import ContrastClassification, WindowTooSmall, classify_contrast, theta_eigenvalues

__all__ = [name for name in dir() if not name.startswith("_")]
