"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` operation for operation: same enumeration order,
same stream derivation, same rounding rule. Used when the compiled extension
is unavailable or when ``PMLHIST_PURE_PYTHON=1``.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .rng import (
    DATA,
    DERIVE_MULT,
    DERIVE_SALT,
    GOLDEN,
    NOISE,
    mix64,
    mix64_array,
    u64_to_open_unit,
)

NAME = "python"

# elements per temporary (terms x outcomes) block in class_loglik
_BLOCK_ELEMS = 1 << 21
# elements per (reps x n) block in simulate_tvd
_SIM_ELEMS = 1 << 21


def compositions(total: int, parts: int, chunk: int = 65536):
    """Yield (m, parts) int arrays of all compositions of ``total``.

    Order is lexicographic ascending in (m_0, ..., m_{parts-1}), via
    stars and bars over the bar positions.
    """
    if parts == 1:
        yield np.array([[total]], dtype=np.int64)
        return
    slots = total + parts - 1
    bars_iter = itertools.combinations(range(slots), parts - 1)
    while True:
        block = list(itertools.islice(bars_iter, chunk))
        if not block:
            return
        bars = np.asarray(block, dtype=np.int64)
        m = np.empty((bars.shape[0], parts), dtype=np.int64)
        m[:, 0] = bars[:, 0]
        m[:, 1:-1] = np.diff(bars, axis=1) - 1
        m[:, -1] = slots - 1 - bars[:, -1]
        yield m


def class_loglik(Y, logp, total, b):
    """Per-class log-likelihood of each outcome row in ``Y``.

    ``out[r, c] = log sum_m w(m) * prod_j exp(-|Y[r, j] - m_j - [j == c]| / b)``
    where ``m`` ranges over count vectors of ``total`` other entries and
    ``w`` is the multinomial pmf under ``exp(logp)``.
    """
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    logp = np.asarray(logp, dtype=np.float64)
    M, k = Y.shape
    lgam = np.array([math.lgamma(i + 1.0) for i in range(total + 1)])
    acc_max = np.full((M, k), -np.inf)
    acc_sum = np.zeros((M, k))
    rows = max(1, _BLOCK_ELEMS // max(M * k, 1))
    for m in compositions(total, k, chunk=rows):
        logw = lgam[total] - lgam[m].sum(axis=1) + (m * logp).sum(axis=1)
        # (T, M, k) residuals
        resid = Y[None, :, :] - m[:, None, :].astype(np.float64)
        absr = np.abs(resid)
        base = logw[:, None] - absr.sum(axis=2) / b
        delta = (absr - np.abs(resid - 1.0)) / b
        v = base[:, :, None] + delta
        bmax = v.max(axis=0)
        new_max = np.maximum(acc_max, bmax)
        with np.errstate(invalid="ignore"):
            acc_sum = acc_sum * np.exp(acc_max - new_max) + np.exp(
                v - new_max[None]
            ).sum(axis=0)
        acc_max = new_max
    return acc_max + np.log(acc_sum)


def _derive_vec(keys, label):
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        inner = mix64_array(keys ^ np.uint64(DERIVE_SALT))
        return mix64_array(inner + np.uint64(((label + 1) * DERIVE_MULT) & ((1 << 64) - 1)))


def _draws(keys, count):
    idx = np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN)
    with np.errstate(over="ignore"):
        return u64_to_open_unit(mix64_array(keys[:, None] + idx[None, :]))


def laplace_from_uniform(U, b):
    """Inverse-CDF Laplace transform of uniforms on (0, 1)."""
    u = np.asarray(U, dtype=np.float64) - 0.5
    mag = -b * np.log1p(-2.0 * np.abs(u))
    return np.where(u > 0.0, mag, -mag)


def round_half_away(x):
    """Round non-negative values to the nearest integer, ties upward."""
    f = np.floor(x)
    return f + (x - f >= 0.5)


def simulate_tvd(cell_key, n, k, rep_start, rep_stop, scales, fixed_data_key=None):
    """TVD between sanitized and true empirical distribution, per rep and scale.

    Returns ``(tvd, degenerate)`` arrays of shape ``(reps, len(scales))``.
    All scales share the same dataset and noise uniforms within a rep.
    """
    scales = np.asarray(scales, dtype=np.float64)
    reps = rep_stop - rep_start
    tvd = np.empty((reps, scales.size))
    degenerate = np.zeros((reps, scales.size), dtype=bool)

    fixed_hist = None
    if fixed_data_key is not None:
        U = _draws(np.array([fixed_data_key], dtype=np.uint64), n)
        labels = np.minimum((U * k).astype(np.int64), k - 1)
        fixed_hist = np.bincount(labels.ravel(), minlength=k).astype(np.float64)

    step = max(1, _SIM_ELEMS // max(n, k, 1))
    for lo in range(rep_start, rep_stop, step):
        hi = min(lo + step, rep_stop)
        r = np.arange(lo, hi, dtype=np.uint64)
        # derive(cell_key, r) with the label varying per row
        with np.errstate(over="ignore"):
            inner = mix64(cell_key ^ DERIVE_SALT)
            rep_keys = mix64_array(
                np.uint64(inner) + (r + np.uint64(1)) * np.uint64(DERIVE_MULT)
            )
        R = r.size
        if fixed_hist is None:
            U = _draws(_derive_vec(rep_keys, DATA), n)
            labels = np.minimum((U * k).astype(np.int64), k - 1)
            offs = labels + (np.arange(R, dtype=np.int64) * k)[:, None]
            hist = np.bincount(offs.ravel(), minlength=R * k).reshape(R, k)
            hist = hist.astype(np.float64)
        else:
            hist = np.broadcast_to(fixed_hist, (R, k))
        q = hist / n

        noise_keys = _derive_vec(rep_keys, NOISE)
        bin_keys = np.empty((R, k), dtype=np.uint64)
        for j in range(k):
            bin_keys[:, j] = _derive_vec(noise_keys, j)
        with np.errstate(over="ignore"):
            Un = u64_to_open_unit(mix64_array(bin_keys + np.uint64(GOLDEN)))

        for s_idx, b in enumerate(scales):
            noisy = hist + laplace_from_uniform(Un, b)
            san = round_half_away(np.maximum(noisy, 0.0))
            tot = san.sum(axis=1)
            deg = tot == 0.0
            with np.errstate(invalid="ignore", divide="ignore"):
                phat = san / tot[:, None]
            d = 0.5 * np.abs(phat - q).sum(axis=1)
            d[deg] = 1.0
            tvd[lo - rep_start:hi - rep_start, s_idx] = d
            degenerate[lo - rep_start:hi - rep_start, s_idx] = deg
    return tvd, degenerate
