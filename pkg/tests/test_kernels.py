import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from pmlhist import _core, _pykernels
from pmlhist.rng import DATA, RandomStream

needs_compiled = pytest.mark.skipif(_core.compiled is None, reason="compiled kernels not built")


def test_compositions_lexicographic():
    for total, parts in [(0, 3), (1, 2), (3, 3), (4, 4), (5, 1)]:
        got = np.concatenate(list(_pykernels.compositions(total, parts, chunk=3)))
        want = sorted(c for c in itertools.product(range(total + 1), repeat=parts) if sum(c) == total)
        assert [tuple(r) for r in got] == want


def test_chunked_reps_concatenate(backend):
    kern = _core.get_kernels(backend)
    key = RandomStream(8, (5,)).key
    whole, dw = kern.simulate_tvd(key, 300, 5, 0, 100, [2.0, 5.0])
    a, da = kern.simulate_tvd(key, 300, 5, 0, 37, [2.0, 5.0])
    b, db = kern.simulate_tvd(key, 300, 5, 37, 100, [2.0, 5.0])
    np.testing.assert_array_equal(whole, np.concatenate([a, b]))
    np.testing.assert_array_equal(dw, np.concatenate([da, db]))


def test_zero_scale_is_noise_free(backend):
    kern = _core.get_kernels(backend)
    tv, deg = kern.simulate_tvd(RandomStream(0, (4,)).key, 100, 4, 0, 50, [0.0])
    assert np.all(tv == 0) and not deg.any()


def test_degenerate_flag(backend):
    # n=1 with huge noise: all-zero sanitized histograms are common
    kern = _core.get_kernels(backend)
    tv, deg = kern.simulate_tvd(RandomStream(0, (3,)).key, 1, 3, 0, 2000, [50.0])
    assert deg.any()
    assert np.all(tv[deg] == 1.0)
    assert np.all((tv >= 0) & (tv <= 1))


def test_scale_columns_independent(backend):
    kern = _core.get_kernels(backend)
    key = RandomStream(2, (6,)).key
    both, _ = kern.simulate_tvd(key, 200, 6, 0, 40, [1.0, 3.0])
    one, _ = kern.simulate_tvd(key, 200, 6, 0, 40, [3.0])
    np.testing.assert_array_equal(both[:, 1], one[:, 0])


@needs_compiled
def test_simulate_backends_agree():
    key = RandomStream(31, (10,)).key
    fixed = RandomStream(31, (10, "fixed")).child(DATA).key
    for fk in (None, fixed):
        c, dc = _core.get_kernels("cython").simulate_tvd(key, 500, 10, 0, 500, [0.3, 4.0, 0.0], fk)
        p, dp = _core.get_kernels("python").simulate_tvd(key, 500, 10, 0, 500, [0.3, 4.0, 0.0], fk)
        np.testing.assert_allclose(c, p, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(dc, dp)


@needs_compiled
def test_loglik_backends_agree():
    rng = np.random.default_rng(5)
    for total, k in [(0, 2), (3, 3), (12, 4), (30, 2)]:
        Y = rng.uniform(-3, total + 3, size=(20, k))
        logp = np.log(rng.dirichlet(np.ones(k)) * 0.8 + 0.2 / k)
        for b in [0.3, 1.0, 4.0]:
            c = _core.get_kernels("cython").class_loglik(Y, logp, total, b)
            p = _core.get_kernels("python").class_loglik(Y, logp, total, b)
            np.testing.assert_allclose(c, p, rtol=1e-13, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _core.get_kernels("fortran")


def test_env_forces_fallback():
    env = dict(os.environ, PMLHIST_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import pmlhist; print(pmlhist.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
