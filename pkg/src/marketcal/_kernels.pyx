# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: the price recurrence and the tree split search.

marketcal._kernels_py provides the same functions in numpy; see
marketcal.backend for how one of the two is selected at import time.
No fast-math flags are used so both backends round identically.
"""

from libc.math cimport tanh, isfinite, INFINITY


def simulate_steps(double[::1] eps, double[::1] v, double p0, double m0,
                   double kappa, double beta, double gamma, double alpha,
                   double sigma_n, double[::1] out):
    """Run the three-trader price recurrence for len(eps) steps.

    out must have length len(eps) + 1; out[0] is set to p0. Returns -1 on
    success, otherwise the 1-based index of the first step whose price or
    momentum is non-finite.
    """
    cdef Py_ssize_t n = eps.shape[0]
    cdef Py_ssize_t t
    cdef double p = p0
    cdef double m = m0
    cdef double dp
    out[0] = p
    for t in range(n):
        dp = kappa * (v[t] - p) + beta * tanh(gamma * m) + sigma_n * eps[t]
        p = p + dp
        m = (1.0 - alpha) * m + alpha * dp
        out[t + 1] = p
        if not (isfinite(p) and isfinite(m)):
            return t + 1
    return -1


def best_split(double[::1] xs, double[::1] rs, double lam, double min_count):
    """Best threshold for one feature column of one tree node.

    xs is sorted ascending with rs the aligned residuals. Candidate splits
    sit at midpoints between distinct consecutive values; both children must
    hold at least min_count rows. Gain is the L2-regularised score
    improvement g_L^2/(n_L+lam) + g_R^2/(n_R+lam) - g^2/(n+lam).

    Returns (gain, threshold, n_left); gain is -inf when no candidate is
    admissible. Ties keep the lowest threshold.
    """
    cdef Py_ssize_t n = xs.shape[0]
    if n < 2:
        return -INFINITY, 0.0, 0
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += rs[i]
    cdef double parent = total * total / (n + lam)
    cdef double best_gain = -INFINITY
    cdef double best_threshold = 0.0
    cdef Py_ssize_t best_left = 0
    cdef double gl = 0.0
    cdef double gr, nl, nr, gain
    for i in range(n - 1):
        gl += rs[i]
        nl = <double>(i + 1)
        nr = <double>(n - i - 1)
        if xs[i + 1] > xs[i] and nl >= min_count and nr >= min_count:
            gr = total - gl
            gain = gl * gl / (nl + lam) + gr * gr / (nr + lam) - parent
            if gain > best_gain:
                best_gain = gain
                best_threshold = (xs[i] + xs[i + 1]) / 2.0
                best_left = i + 1
    return best_gain, best_threshold, best_left
