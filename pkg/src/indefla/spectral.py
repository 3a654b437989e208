"""Mode-block diagnostics of the contrast dichotomy.

At the critical contrast the difference block loses its leading ``|m|``
terms and the interface operator ``Theta`` decays exponentially in ``|m|``,
so its spectrum accumulates only at zero.  Off the critical contrast the
eigenvalues of ``Psi`` grow like ``(1 - mu) m^2 / (2 r^2)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import AnnularGeometry, IndeflaError
from .dtn import lambda_block, psi_mode, theta_mode

DEFAULT_CRITICAL_WINDOW = (10, 40)
DEFAULT_GROWTH_WINDOW = (20, 60)
MIN_WINDOW_LENGTH = 10


class WindowTooSmall(IndeflaError, ValueError):
    code = "window_too_small"


def _sym_eigs_log(A: np.ndarray, e: int, weights: np.ndarray):
    """Eigenvalues of ``W^{1/2} (A 2^e) W^{-1/2}`` as (signs, log2 |lambda|), larger magnitude first.

    The small eigenvalue is taken as ``det / lambda_big`` so that it keeps
    its relative accuracy when the two differ by many orders of magnitude.
    """
    sw = np.sqrt(weights)
    M = sw[:, None] * A / sw[None, :]
    M = 0.5 * (M + M.T)
    a, b, c = M[0, 0], M[0, 1], M[1, 1]
    half = 0.5 * (a + c)
    rad = math.hypot(0.5 * (a - c), b)
    big = half + math.copysign(rad, half) if half != 0 else rad
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]  # similarity keeps the determinant
    small = det / big if big != 0 else 0.0
    out = []
    for lam, shift in ((big, e), (small, e)):
        if lam == 0:
            out.append((0.0, -math.inf))
        else:
            out.append((math.copysign(1.0, lam), math.log2(abs(lam)) + shift))
    return out


def _weights(geom: AnnularGeometry, m: int) -> np.ndarray:
    lam = lambda_block(geom, m)
    return np.array([geom.r_i * lam.w_i, geom.r_e * lam.w_e])


def _theta_log(geom: AnnularGeometry, mu: float, m: int):
    A, e = theta_mode(geom, mu, m).normalized()
    return _sym_eigs_log(A, e, _weights(geom, m))


def _psi_log(geom: AnnularGeometry, mu: float, m: int):
    A, e = psi_mode(geom, mu, m).normalized()
    # diag(r) Psi is symmetric
    return _sym_eigs_log(A, e, np.array([geom.r_i, geom.r_e]))


def _to_float(sign: float, log2v: float) -> float:
    if log2v == -math.inf or log2v < -1074:
        return 0.0
    return sign * 2.0 ** log2v


def theta_eigenvalues(geom: AnnularGeometry, mu: float, m: int) -> tuple[float, float]:
    """Eigenvalues of the H^{1/2}-symmetrized ``Theta_m``, larger magnitude first."""
    (s1, l1), (s2, l2) = _theta_log(geom, mu, m)
    return _to_float(s1, l1), _to_float(s2, l2)


def psi_eigenvalues(geom: AnnularGeometry, mu: float, m: int) -> tuple[float, float]:
    (s1, l1), (s2, l2) = _psi_log(geom, mu, m)
    return _to_float(s1, l1), _to_float(s2, l2)


def theta_log_max(geom: AnnularGeometry, mu: float, m: int) -> float:
    """Natural log of ``|lambda_max(Theta_m)|``; finite even where the float would underflow."""
    return _theta_log(geom, mu, m)[0][1] * math.log(2.0)


def symmetrized_theta(geom: AnnularGeometry, mu: float, m: int) -> tuple[np.ndarray, int]:
    """``(S, e)`` with ``S * 2**e = W^{1/2} Theta_m W^{-1/2}`` (exactly symmetric up to rounding)."""
    A, e = theta_mode(geom, mu, m).normalized()
    sw = np.sqrt(_weights(geom, m))
    return sw[:, None] * A / sw[None, :], e


@dataclass
class ContrastClassification:
    regime: str  # "Critical" or "NonCritical"
    window: tuple
    decay_rate: float | None = None
    intercept: float | None = None
    growth_constants: tuple | None = None
    sign_consistent: bool | None = None
    residual: float = 0.0          # relative rms residual of the fit, sqrt(1 - R^2) for the decay fit
    residual_abs: float = 0.0      # rms residual in the fitted quantity's own units
    mu: float = 1.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        if self.growth_constants is not None:
            d["growth_constants"] = list(self.growth_constants)
        return d


def _check_window(window) -> tuple[int, int]:
    lo, hi = int(window[0]), int(window[1])
    if lo < 0 or hi - lo + 1 < MIN_WINDOW_LENGTH:
        raise WindowTooSmall(f"mode window [{lo}, {hi}] has fewer than {MIN_WINDOW_LENGTH} modes")
    return lo, hi


def decay_fit(geom: AnnularGeometry, mu: float, window=DEFAULT_CRITICAL_WINDOW) -> dict:
    """OLS fit of ``ln |lambda_max(Theta_m)|`` against ``m`` over the window."""
    lo, hi = _check_window(window)
    ms = np.arange(lo, hi + 1)
    y = np.array([theta_log_max(geom, mu, int(m)) for m in ms])
    slope, intercept = np.polyfit(ms, y, 1)
    res = y - (slope * ms + intercept)
    rms = float(np.sqrt(np.mean(res ** 2)))
    spread = float(np.std(y))
    return {"slope": float(slope), "intercept": float(intercept), "rms": rms,
            "relative": rms / spread if spread > 0 else math.inf, "log_values": y, "modes": ms}


def growth_fit(geom: AnnularGeometry, mu: float, window=DEFAULT_GROWTH_WINDOW) -> dict:
    """Limits of ``lambda_j(Psi_m) / m^2`` from an OLS fit in ``1/m``.

    Eigenvalues are matched to the circles by magnitude: the smaller limit
    belongs to the outer circle, so ``j = 0`` is the larger one.
    """
    lo, hi = _check_window(window)
    ms = np.arange(max(lo, 1), hi + 1)
    vals = np.array([psi_eigenvalues(geom, mu, int(m)) for m in ms]) / (ms[:, None] ** 2)
    x = 1.0 / ms
    limits, rms, rel = [], [], []
    for j in range(2):
        slope, c = np.polyfit(x, vals[:, j], 1)
        r = vals[:, j] - (slope * x + c)
        limits.append(float(c))
        rms.append(float(np.sqrt(np.mean(r ** 2))))
        rel.append(rms[-1] / abs(c) if c != 0 else math.inf)
    sign = np.sign(1.0 - mu)
    consistent = bool(sign != 0 and np.all(np.sign(vals) == sign))
    return {"limits": tuple(limits), "rms": max(rms), "relative": max(rel), "ratios": vals,
            "modes": ms, "sign_consistent": consistent}


def classify_contrast(geom: AnnularGeometry, mu: float, mode_window=None) -> ContrastClassification:
    """Critical / NonCritical regime from the mode-block diagnostics."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if mu == 1:
        window = _check_window(mode_window or DEFAULT_CRITICAL_WINDOW)
        fit = decay_fit(geom, mu, window)
        return ContrastClassification("Critical", window, decay_rate=fit["slope"], intercept=fit["intercept"],
                                      residual=fit["relative"], residual_abs=fit["rms"], mu=mu)
    window = _check_window(mode_window or DEFAULT_GROWTH_WINDOW)
    fit = growth_fit(geom, mu, window)
    return ContrastClassification("NonCritical", window, growth_constants=fit["limits"],
                                  sign_consistent=fit["sign_consistent"], residual=fit["relative"],
                                  residual_abs=fit["rms"], mu=mu)


def spectrum_table(geom: AnnularGeometry, mu: float, modes) -> list[tuple]:
    """Rows ``(m, lambda1, lambda2, kind)`` for Theta and Psi."""
    rows = []
    for m in modes:
        rows.append((int(m), *theta_eigenvalues(geom, mu, int(m)), "Theta"))
        rows.append((int(m), *psi_eigenvalues(geom, mu, int(m)), "Psi"))
    return rows
