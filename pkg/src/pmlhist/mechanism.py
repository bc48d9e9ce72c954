"""Histogram computation, Laplace noise, sanitization and TVD.

Randomness comes exclusively from :class:`~pmlhist.rng.RandomStream`. Given a
per-repetition stream ``s``:

* dataset labels use ``s.child(DATA)``, draw ``i`` for entry ``i``;
* noise on bin ``j`` uses ``s.child(NOISE, j)``, draw 0.

The compiled Monte Carlo kernel follows the same layout, so a single
repetition can be replayed through this module.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._pykernels import laplace_from_uniform, round_half_away
from .bounds import check_k, check_scale
from .errors import DomainError
from .rng import DATA, NOISE, RandomStream

__all__ = [
    "Dataset",
    "Histogram",
    "NoisyHistogram",
    "SanitizedHistogram",
    "gen_dataset",
    "gen_uniform_dataset",
    "histogram",
    "laplace_from_uniform",
    "laplace_sample",
    "normalize",
    "parse_dataset",
    "privatize",
    "read_dataset",
    "sanitize",
    "tvd",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Pre-classified records: ``labels`` are 1-based class indices."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        check_k(self.k)
        if labels.ndim != 1 or labels.size == 0:
            raise DomainError("a dataset needs at least one label")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.asarray(labels, dtype=float) == np.round(labels)):
                raise DomainError("labels must be integers")
        labels = labels.astype(np.int64)
        bad = (labels < 1) | (labels > self.k)
        if bad.any():
            raise DomainError(
                f"label {int(labels[bad][0])} outside [1, {self.k}]"
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray

    @property
    def k(self) -> int:
        return int(self.counts.size)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class NoisyHistogram:
    """Raw mechanism outcome ``y`` before clipping and rounding."""

    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SanitizedHistogram:
    counts: np.ndarray


def histogram(d: Dataset) -> Histogram:
    counts = np.bincount(d.labels - 1, minlength=d.k).astype(np.int64)
    return Histogram(counts)


def laplace_sample(s: RandomStream, b: float) -> float:
    """One zero-mean Laplace(b) draw from draw 0 of ``s``."""
    b = check_scale(b)
    return float(laplace_from_uniform(s.uniform(0), b))


def sanitize(values) -> SanitizedHistogram:
    """Clip at zero and round to the nearest integer (ties away from zero)."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DomainError("noisy values must be finite")
    return SanitizedHistogram(round_half_away(np.maximum(values, 0.0)).astype(np.int64))


def privatize(h: Histogram, b: float, s: RandomStream | None = None, noise=None):
    """Add Laplace noise to each bin, then sanitize.

    Either a stream ``s`` or explicit ``noise`` (length ``k``) must be given;
    the latter exists for testing.

    Returns:
        ``(NoisyHistogram, SanitizedHistogram)``
    """
    b = check_scale(b)
    counts = np.asarray(h.counts, dtype=np.float64)
    if noise is None:
        if s is None:
            raise DomainError("privatize needs a random stream or explicit noise")
        U = np.array([s.child(NOISE, j).uniform(0) for j in range(counts.size)])
        noise = laplace_from_uniform(U, b)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != counts.shape:
        raise DomainError(f"noise has shape {noise.shape}, expected {counts.shape}")
    noisy = counts + noise
    return NoisyHistogram(noisy), sanitize(noisy)


def normalize(counts) -> np.ndarray | None:
    """Empirical distribution of ``counts``; ``None`` flags zero total mass."""
    if isinstance(counts, (Histogram, SanitizedHistogram)):
        counts = counts.counts
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return None
    return counts / total


def tvd(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DomainError(f"distributions differ in shape: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise DomainError(f"{name} is not a probability vector")
    return 0.5 * float(np.abs(p - q).sum())


def gen_uniform_dataset(n: int, k: int, s: RandomStream) -> Dataset:
    """``n`` i.i.d. labels uniform on ``1..k`` from ``s.child(DATA)``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    k = check_k(k)
    U = s.child(DATA).uniforms(n)
    labels = np.minimum((U * k).astype(np.int64), k - 1) + 1
    return Dataset(labels, k)


def gen_dataset(n: int, probs, s: RandomStream) -> Dataset:
    """``n`` i.i.d. labels drawn from ``probs`` by inverse CDF."""
    probs = np.asarray(probs, dtype=np.float64)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    cdf = np.cumsum(probs)
    U = s.child(DATA).uniforms(n)
    labels = np.minimum(np.searchsorted(cdf, U * cdf[-1], side="right"), probs.size - 1)
    return Dataset(labels + 1, probs.size)


def parse_dataset(text: str, k: int | None = None) -> Dataset:
    """Parse one-label-per-line text or a CSV with a ``label`` column.

    A leading ``k=<int>`` line fixes the number of bins; otherwise ``k`` is
    the largest label (or the ``k`` argument, which takes precedence).
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    header_k = None
    if lines and lines[0].lower().startswith("k="):
        try:
            header_k = int(lines[0][2:].strip())
        except ValueError:
            raise DomainError(f"bad header line {lines[0]!r}") from None
        lines = lines[1:]
    if lines and "label" in [c.strip().lower() for c in lines[0].split(",")]:
        reader = csv.DictReader(io.StringIO("\n".join(lines)))
        reader.fieldnames = [f.strip().lower() for f in reader.fieldnames]
        raw = [row["label"] for row in reader]
    else:
        raw = lines
    if not raw:
        raise DomainError("dataset is empty")
    labels = []
    for lineno, item in enumerate(raw, start=1):
        try:
            value = float(item)
        except (TypeError, ValueError):
            raise DomainError(f"record {lineno}: {item!r} is not an integer label") from None
        if not math.isfinite(value) or value != int(value):
            raise DomainError(f"record {lineno}: {item!r} is not an integer label")
        labels.append(int(value))
    kk = k if k is not None else header_k if header_k is not None else max(labels)
    return Dataset(np.asarray(labels, dtype=np.int64), kk)


def read_dataset(path, k: int | None = None) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    return parse_dataset(text, k)
