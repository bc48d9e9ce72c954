"""Closed-form leakage bounds for the Laplace histogram mechanism.

All quantities are in nats. A histogram has l1-sensitivity 2, so the DP level
of Laplace noise with scale ``b`` is ``2 / b``. The PML bounds additionally
assume every record lands in every class with probability at least ``alpha``.

Internally the tight bound is evaluated as a function of ``u = 2 / b``::

    f(u) = u - log(1 - alpha + alpha * e**u)

which is continuous and strictly increasing with range ``(0, -log(alpha))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CalibrationError, DomainError, NoNoiseNeeded

HIST_SENSITIVITY = 2.0
DEFAULT_TOL = 1e-10
MAX_ITER = 200


@dataclass(frozen=True)
class AlphaFloor:
    """Lower bound ``alpha`` on every class probability of a ``k``-bin histogram."""

    alpha: float
    k: int

    def __post_init__(self):
        check_alpha(self.alpha, self.k)


@dataclass(frozen=True)
class CalibrationResult:
    scale: float
    achieved: float
    iterations: int
    residual: float


def check_scale(b: float) -> float:
    b = float(b)
    if not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"noise scale b must be positive and finite, got {b}")
    return b


def check_k(k: int) -> int:
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise DomainError(f"number of bins k must be an integer >= 2, got {k}")
    return int(k)


def check_alpha(alpha, k: int | None = None) -> float:
    """Validate ``0 < alpha <= 1/k`` (``1/2`` when ``k`` is unknown)."""
    if isinstance(alpha, AlphaFloor):
        if k is not None and k != alpha.k:
            raise DomainError(f"k={k} disagrees with AlphaFloor.k={alpha.k}")
        return alpha.alpha
    alpha = float(alpha)
    kk = 2 if k is None else check_k(k)
    # 1/k is compared with a relative slack so that e.g. alpha=0.05, k=20 passes
    if not (math.isfinite(alpha) and 0.0 < alpha <= (1.0 / kk) * (1 + 1e-12)):
        raise DomainError(f"alpha must lie in (0, 1/k] = (0, {1.0 / kk:.12g}], got {alpha}")
    return alpha


def check_epsilon(eps: float) -> float:
    eps = float(eps)
    if not (math.isfinite(eps) and eps > 0.0):
        raise DomainError(f"epsilon must be positive and finite, got {eps}")
    return eps


def _tight_u(u: float, alpha: float) -> float:
    if u <= 1.0:
        # log1p form keeps precision for small alpha and small u
        return u - math.log1p(alpha * math.expm1(u))
    return -math.log(alpha + (1.0 - alpha) * math.exp(-u))


def eps_dp(b: float) -> float:
    """Pure DP level of the Laplace histogram mechanism: ``2 / b``."""
    return HIST_SENSITIVITY / check_scale(b)


def eps_pml_tight(b: float, alpha, k: int | None = None) -> float:
    """Tight per-record PML bound ``2/b - log(1 - alpha + alpha*exp(2/b))``."""
    b = check_scale(b)
    alpha = check_alpha(alpha, k)
    return _tight_u(HIST_SENSITIVITY / b, alpha)


def eps_pml_simplified(b: float, alpha, k: int | None = None) -> float:
    """Looser closed form ``2(1 - alpha)/b + 2 alpha**2 / b**2``."""
    b = check_scale(b)
    alpha = check_alpha(alpha, k)
    return 2.0 * (1.0 - alpha) / b + 2.0 * alpha**2 / b**2


def eps_pml_composition(b: float, alpha, k: int | None = None) -> float:
    """Bound from composing ``k - 1`` per-count PML guarantees.

    Grows linearly in ``k``; kept for comparison with the direct bound.
    """
    if isinstance(alpha, AlphaFloor) and k is None:
        k = alpha.k
    if k is None:
        raise DomainError("composition bound needs the number of bins k")
    b = check_scale(b)
    k = check_k(k)
    alpha = check_alpha(alpha, k)
    return (k - 1) * ((1.0 - alpha) / b + alpha**2 / (2.0 * b**2))


def pml_cap(alpha, k: int | None = None) -> float:
    """Supremum of the tight bound over all ``b > 0``, i.e. ``-log(alpha)``."""
    return -math.log(check_alpha(alpha, k))


def calibrate_dp(target: float) -> float:
    """Laplace scale meeting ``target``-DP for a histogram: ``2 / target``."""
    return HIST_SENSITIVITY / check_epsilon(target)


def calibrate_pml(
    target: float,
    alpha,
    tol: float = DEFAULT_TOL,
    k: int | None = None,
    max_iter: int = MAX_ITER,
) -> CalibrationResult:
    """Find the scale ``b`` whose tight PML bound equals ``target``.

    Bisects on ``u = 2/b`` between ``u = target`` (the bound never exceeds
    ``u``) and an upper end doubled from 1 until it overshoots.

    Raises:
        NoNoiseNeeded: if ``target >= -log(alpha)``.
        CalibrationError: if ``max_iter`` bisection steps do not reach ``tol``.
    """
    target = check_epsilon(target)
    alpha = check_alpha(alpha, k)
    tol = float(tol)
    if not (math.isfinite(tol) and tol > 0.0):
        raise DomainError(f"tolerance must be positive, got {tol}")
    cap = -math.log(alpha)
    if target >= cap:
        raise NoNoiseNeeded(target, cap)

    lo = target
    hi = 1.0
    while _tight_u(hi, alpha) < target:
        hi *= 2.0
        if hi > 1e300:
            raise CalibrationError(f"could not bracket target {target} below cap {cap}")

    f_lo = _tight_u(lo, alpha)
    if abs(f_lo - target) <= tol:
        return CalibrationResult(HIST_SENSITIVITY / lo, f_lo, 0, f_lo - target)

    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        val = _tight_u(mid, alpha)
        if abs(val - target) <= tol:
            return CalibrationResult(HIST_SENSITIVITY / mid, val, it, val - target)
        if mid == lo or mid == hi:
            break
        if val < target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"bisection did not reach tol={tol} for target {target}, alpha {alpha} "
        f"within {max_iter} iterations"
    )
