# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, lgamma, log, exp, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t DERIVE_MULT = 0xD1B54A32D192ED03ULL
cdef uint64_t DERIVE_SALT = 0x2545F4914F6CDD1DULL
cdef int DATA = 0
cdef int NOISE = 1


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t key, uint64_t label) noexcept nogil:
    return mix64(mix64(key ^ DERIVE_SALT) + (label + 1) * DERIVE_MULT)


cdef inline double unit(uint64_t key, uint64_t index) noexcept nogil:
    cdef uint64_t z = mix64(key + (index + 1) * GOLDEN)
    return (<double>(z >> 12) + 0.5) * 2.220446049250313e-16


cdef inline double laplace(double U, double b) noexcept nogil:
    cdef double u = U - 0.5
    cdef double mag = -b * log1p(-2.0 * fabs(u))
    if u > 0.0:
        return mag
    return -mag


cdef inline double round_half_away(double x) noexcept nogil:
    cdef double f = floor(x)
    if x - f >= 0.5:
        return f + 1.0
    return f


def class_loglik(Y, logp, long total, double b):
    """Per-class log-likelihood of each outcome row; see ``_pykernels``."""
    cdef double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef Py_ssize_t M = y.shape[0], k = y.shape[1]
    out = np.empty((M, k), dtype=np.float64)
    cdef double[:, ::1] acc_max = np.full((M, k), -INFINITY)
    cdef double[:, ::1] acc_sum = np.zeros((M, k))
    cdef double[::1] lgam = np.array([lgamma(i + 1.0) for i in range(total + 1)])
    cdef int64_t[::1] m = np.zeros(k, dtype=np.int64)
    cdef double[::1] absr = np.empty(k)
    cdef double logw, base, r, v, mx
    cdef Py_ssize_t j, c, row, t
    cdef int64_t rest
    cdef bint done = False

    with nogil:
        m[k - 1] = total
        while not done:
            logw = lgam[total]
            for j in range(k):
                logw = logw - lgam[m[j]] + m[j] * lp[j]
            for row in range(M):
                base = logw
                for j in range(k):
                    r = y[row, j] - m[j]
                    absr[j] = fabs(r)
                    base = base - absr[j] / b
                for c in range(k):
                    r = y[row, c] - m[c]
                    v = base + (absr[c] - fabs(r - 1.0)) / b
                    mx = acc_max[row, c]
                    if v > mx:
                        acc_sum[row, c] = acc_sum[row, c] * exp(mx - v) + 1.0
                        acc_max[row, c] = v
                    else:
                        acc_sum[row, c] = acc_sum[row, c] + exp(v - mx)
            # next composition in lexicographic order
            t = k - 1
            while t > 0 and m[t] == 0:
                t -= 1
            if t == 0:
                done = True
            else:
                rest = m[t] - 1
                m[t - 1] += 1
                m[t] = 0
                m[k - 1] = rest

    cdef double[:, ::1] o = out
    for row in range(M):
        for c in range(k):
            o[row, c] = acc_max[row, c] + log(acc_sum[row, c])
    return out


def simulate_tvd(uint64_t cell_key, long n, long k, long rep_start, long rep_stop,
                 scales, fixed_data_key=None):
    """TVD per rep and scale under shared draws; see ``_pykernels``."""
    cdef double[::1] sc = np.ascontiguousarray(scales, dtype=np.float64)
    cdef Py_ssize_t S = sc.shape[0]
    cdef Py_ssize_t R = rep_stop - rep_start
    tvd_arr = np.empty((R, S), dtype=np.float64)
    deg_arr = np.zeros((R, S), dtype=np.bool_)
    cdef double[:, ::1] tvd = tvd_arr
    cdef cnp.npy_bool[:, ::1] deg = deg_arr
    cdef double[::1] hist = np.zeros(k)
    cdef double[::1] q = np.empty(k)
    cdef double[::1] un = np.empty(k)
    cdef double[::1] san = np.empty(k)
    cdef bint fixed = fixed_data_key is not None
    cdef uint64_t fkey = fixed_data_key if fixed else 0
    cdef uint64_t rep_key, data_key, noise_key
    cdef Py_ssize_t i, j, s, rr
    cdef long lab
    cdef double tot, d, x

    with nogil:
        if fixed:
            for i in range(n):
                lab = <long>(unit(fkey, i) * k)
                if lab > k - 1:
                    lab = k - 1
                hist[lab] += 1.0
        for rr in range(R):
            rep_key = derive(cell_key, <uint64_t>(rep_start + rr))
            if not fixed:
                for j in range(k):
                    hist[j] = 0.0
                data_key = derive(rep_key, DATA)
                for i in range(n):
                    lab = <long>(unit(data_key, i) * k)
                    if lab > k - 1:
                        lab = k - 1
                    hist[lab] += 1.0
            noise_key = derive(rep_key, NOISE)
            for j in range(k):
                q[j] = hist[j] / n
                un[j] = unit(derive(noise_key, j), 0)
            for s in range(S):
                tot = 0.0
                for j in range(k):
                    x = hist[j] + laplace(un[j], sc[s])
                    if x < 0.0:
                        x = 0.0
                    san[j] = round_half_away(x)
                    tot = tot + san[j]
                if tot == 0.0:
                    tvd[rr, s] = 1.0
                    deg[rr, s] = 1
                else:
                    d = 0.0
                    for j in range(k):
                        d = d + fabs(san[j] / tot - q[j])
                    tvd[rr, s] = 0.5 * d
    return tvd_arr, deg_arr
