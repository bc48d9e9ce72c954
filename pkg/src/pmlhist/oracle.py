"""Exact pointwise maximal leakage of one record, by enumeration.

For an i.i.d. database of ``n`` records with class probabilities ``p``, the
leakage about record 1 at outcome ``y`` is::

    log max_c L_c(y) / sum_c p_c L_c(y)

where ``L_c(y)`` is the density of ``y`` given that record 1 is in class
``c``, averaged over the multinomial counts of the other ``n - 1`` records.
The Laplace normalizer ``(2b)**-k`` is common to every ``L_c`` and dropped.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .bounds import check_alpha, check_k, check_scale, eps_pml_tight
from .errors import DomainError, EnumerationTooLarge
from .mechanism import NoisyHistogram, gen_dataset, histogram, privatize
from .rng import RandomStream

DEFAULT_MAX_TERMS = 2_000_000
SOUNDNESS_SLACK = 1e-12
TIGHTNESS_TOL = 1e-9
# adversarial lattice points are only added when the count simplex is this small
LATTICE_LIMIT = 2_000


@dataclass(frozen=True)
class EnumerationBudget:
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be positive, got {self.max_terms}")


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    """Class probabilities of every record; ``alpha`` defaults to ``min(probs)``."""

    probs: np.ndarray
    alpha: float | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise DomainError("probs must be a vector")
        check_k(p.size)
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"probs sum to {p.sum()!r}, not 1")
        alpha = float(p.min()) if self.alpha is None else float(self.alpha)
        check_alpha(alpha, p.size)
        if np.any(p < alpha):
            raise DomainError(f"min probability {p.min()} is below alpha={alpha}")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "alpha", alpha)

    @property
    def k(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True, eq=False)
class LeakageReport:
    """Exact leakage at one outcome.

    ``per_class_likelihood`` is scaled so its maximum is 1; ``marginal`` uses
    the same scale.
    """

    outcome: NoisyHistogram
    log_likelihood: np.ndarray
    per_class_likelihood: np.ndarray
    marginal: float
    pml: float
    argmax_class: int


@dataclass(eq=False)
class VerifyReport:
    alpha: float
    bound: float
    evaluated: int
    max_pml: float
    min_gap: float
    witness_pml: float
    witness_gap: float
    violations: list = field(default_factory=list)

    @property
    def tight(self) -> bool:
        return abs(self.witness_gap) <= TIGHTNESS_TOL

    @property
    def sound(self) -> bool:
        return not self.violations


def enumeration_terms(n: int, k: int) -> int:
    """Number of count vectors for the ``n - 1`` other records."""
    return math.comb(n - 1 + k - 1, k - 1)


def _check_budget(n: int, k: int, budget: EnumerationBudget | None) -> None:
    budget = budget or EnumerationBudget()
    terms = enumeration_terms(n, k)
    if terms > budget.max_terms:
        raise EnumerationTooLarge(terms, budget.max_terms)


def _pml_from_loglik(L: np.ndarray, logp: np.ndarray) -> np.ndarray:
    top = L.max(axis=-1)
    z = L + logp - top[..., None]
    return -np.log(np.exp(z).sum(axis=-1))


def class_log_likelihoods(Y, p: ClassDistribution, n: int, b: float,
                          budget: EnumerationBudget | None = None,
                          backend: str | None = None) -> np.ndarray:
    """``(M, k)`` log-likelihoods of each outcome row given record 1's class."""
    b = check_scale(b)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if Y.shape[1] != p.k:
        raise DomainError(f"outcome has {Y.shape[1]} bins, distribution has {p.k}")
    if not np.all(np.isfinite(Y)):
        raise DomainError("outcomes must be finite")
    _check_budget(n, p.k, budget)
    kern = _core.kernels if backend is None else _core.get_kernels(backend)
    return kern.class_loglik(Y, np.log(p.probs), n - 1, b)


def exact_pml_batch(Y, p: ClassDistribution, n: int, b: float,
                    budget: EnumerationBudget | None = None,
                    backend: str | None = None) -> np.ndarray:
    L = class_log_likelihoods(Y, p, n, b, budget, backend)
    return _pml_from_loglik(L, np.log(p.probs))


def exact_pml(y, p: ClassDistribution, n: int, b: float,
              budget: EnumerationBudget | None = None,
              backend: str | None = None) -> LeakageReport:
    """Exact leakage about one record at outcome ``y``."""
    if isinstance(y, NoisyHistogram):
        y = y.values
    y = np.asarray(y, dtype=np.float64)
    L = class_log_likelihoods(y[None, :], p, n, b, budget, backend)[0]
    logp = np.log(p.probs)
    scaled = np.exp(L - L.max())
    marginal = float(np.dot(p.probs, scaled))
    pml = float(_pml_from_loglik(L, logp))
    return LeakageReport(
        outcome=NoisyHistogram(y),
        log_likelihood=L,
        per_class_likelihood=scaled,
        marginal=marginal,
        pml=pml,
        argmax_class=int(np.argmax(L)) + 1,
    )


def tightness_witness(n: int, k: int, cls: int = 1) -> NoisyHistogram:
    """Outcome with all ``n`` counts in bin ``cls`` and zero elsewhere.

    When ``cls`` has the minimum class probability, the tight bound is
    attained there.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    k = check_k(k)
    if not 1 <= cls <= k:
        raise DomainError(f"class {cls} outside [1, {k}]")
    y = np.zeros(k)
    y[cls - 1] = n
    return NoisyHistogram(y)


def adversarial_outcomes(n: int, k: int, cls: int = 1) -> np.ndarray:
    """Extreme and near-lattice outcomes where leakage ratios peak."""
    pts = []
    for c in range(1, k + 1):
        w = tightness_witness(n, k, c).values
        pts.extend([w, -w])
    pts.append(np.zeros(k))
    pts.append(np.full(k, float(n)))
    terms = enumeration_terms(n + 1, k)
    if terms <= LATTICE_LIMIT:
        if terms * 3**k <= LATTICE_LIMIT * 10:
            offsets = np.array(list(itertools.product((-0.5, 0.0, 0.5), repeat=k)))
        else:
            offsets = np.array([np.zeros(k), np.full(k, 0.5), np.full(k, -0.5)])
        kern = _core.get_kernels("python")
        for block in kern.compositions(n, k):
            h = block.astype(np.float64)
            pts.extend((h[:, None, :] + offsets[None, :, :]).reshape(-1, k))
    # the witness for ``cls`` goes first so callers can find it
    pts.insert(0, tightness_witness(n, k, cls).values)
    return np.asarray(pts)


def verify_bound(p: ClassDistribution, n: int, b: float, trials: int,
                 s: RandomStream,
                 budget: EnumerationBudget | None = None) -> VerifyReport:
    """Check the tight bound against exact leakage on sampled and extreme outcomes.

    Random outcomes come from running the mechanism on datasets drawn from
    ``p``; trial ``t`` uses ``s.child(t)``. The bound is evaluated at
    ``p.alpha``; tightness is measured at the witness of the least likely
    class, against the bound at ``min(p)``.
    """
    b = check_scale(b)
    if trials < 0:
        raise DomainError(f"trials must be >= 0, got {trials}")
    _check_budget(n, p.k, budget)
    argmin = int(np.argmin(p.probs)) + 1
    Y = [adversarial_outcomes(n, p.k, argmin)]
    for t in range(trials):
        st = s.child(t)
        noisy, _ = privatize(histogram(gen_dataset(n, p.probs, st)), b, st)
        Y.append(noisy.values[None, :])
    Y = np.concatenate(Y, axis=0)

    pml = exact_pml_batch(Y, p, n, b, budget)
    bound = eps_pml_tight(b, p.alpha)
    bad = np.nonzero(pml > bound + SOUNDNESS_SLACK)[0]
    witness_bound = eps_pml_tight(b, float(p.probs.min()))
    return VerifyReport(
        alpha=p.alpha,
        bound=bound,
        evaluated=int(Y.shape[0]),
        max_pml=float(pml.max()),
        min_gap=float(bound - pml.max()),
        witness_pml=float(pml[0]),
        witness_gap=float(witness_bound - pml[0]),
        violations=[(Y[i].copy(), float(pml[i])) for i in bad],
    )
