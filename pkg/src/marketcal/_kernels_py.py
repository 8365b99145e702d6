"""Pure-Python/numpy fallback for the compiled kernels.

Semantics match marketcal._kernels operation for operation. The price
recurrence performs the identical sequence of float64 operations, so paths
are bit-identical across backends. The split search accumulates prefix sums
left to right (np.cumsum) exactly like the C loop, so split decisions are
bit-identical as well.
"""

import math

import numpy as np


def simulate_steps(eps, v, p0, m0, kappa, beta, gamma, alpha, sigma_n, out):
    """Run the three-trader price recurrence for len(eps) steps.

    out must have length len(eps) + 1; out[0] is set to p0. Returns -1 on
    success, otherwise the 1-based index of the first step whose price or
    momentum is non-finite.
    """
    p = float(p0)
    m = float(m0)
    out[0] = p
    n = len(eps)
    for t in range(n):
        dp = kappa * (v[t] - p) + beta * math.tanh(gamma * m) + sigma_n * eps[t]
        p = p + dp
        m = (1.0 - alpha) * m + alpha * dp
        out[t + 1] = p
        if not (math.isfinite(p) and math.isfinite(m)):
            return t + 1
    return -1


def best_split(xs, rs, lam, min_count):
    """Best threshold for one feature column of one tree node.

    xs is sorted ascending with rs the aligned residuals. Candidate splits
    sit at midpoints between distinct consecutive values; both children must
    hold at least min_count rows. Gain is the L2-regularised score
    improvement g_L^2/(n_L+lam) + g_R^2/(n_R+lam) - g^2/(n+lam).

    Returns (gain, threshold, n_left); gain is -inf when no candidate is
    admissible. Ties keep the lowest threshold.
    """
    n = len(xs)
    if n < 2:
        return -math.inf, 0.0, 0
    cs = np.cumsum(rs)
    total = cs[-1]
    gl = cs[:-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = float(n) - nl
    gr = total - gl
    parent = total * total / (n + lam)
    gains = gl * gl / (nl + lam) + gr * gr / (nr + lam) - parent
    valid = (xs[1:] > xs[:-1]) & (nl >= min_count) & (nr >= min_count)
    if not valid.any():
        return -math.inf, 0.0, 0
    gains = np.where(valid, gains, -math.inf)
    i = int(np.argmax(gains))
    threshold = (xs[i] + xs[i + 1]) / 2.0
    return float(gains[i]), float(threshold), i + 1
