"""Compiled scalar kernels: normal cdf/quantile, truncated normals, and the
Gibbs sweep for factor-structured truncated normals.

Every sampler takes a ``numpy.random.Generator`` so streams stay explicit and
draws are reproducible from the caller's seed.
"""

import math

import numba
import numpy as np

_SQRT1_2 = 0.7071067811865476
# above this standardized bound the inverse-cdf loses relative accuracy
TAIL_SWITCH = 4.0

_jit = numba.njit(cache=True, nogil=True)


@_jit
def ndtr(x):
    return 0.5 * math.erfc(-x * _SQRT1_2)


@_jit
def ndtri(p):
    """Inverse standard normal cdf (Wichura, AS 241, PPND16)."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    if r <= 0.0:
        return -np.inf if q < 0.0 else np.inf
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@_jit
def _exp_tail(rng, a, b):
    # Robert (1995) translated-exponential proposal on (a, b), a > 0
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.standard_exponential() / lam
        if z > b:
            continue
        d = z - lam
        if rng.random() <= math.exp(-0.5 * d * d):
            return z


@_jit
def _uniform_window(rng, a, b):
    # narrow (a, b) with a >= 0: density is maximal at a
    while True:
        z = a + (b - a) * rng.random()
        if rng.random() <= math.exp(-0.5 * (z - a) * (z + a)):
            return z


@_jit
def tn_lower(rng, a):
    """Standard normal restricted to (a, inf)."""
    if a > TAIL_SWITCH:
        return _exp_tail(rng, a, np.inf)
    u = 1.0 - rng.random()  # (0, 1]
    z = -ndtri(u * ndtr(-a))
    return z if z > a else a


@_jit
def tn_interval(rng, a, b):
    """Standard normal restricted to (a, b); either end may be infinite."""
    if b == np.inf:
        return tn_lower(rng, a)
    if a == -np.inf:
        return -tn_lower(rng, -b)
    if b <= 0.0:
        return -tn_interval(rng, -b, -a)
    if a < 0.0:
        pa = ndtr(a)
        z = ndtri(pa + rng.random() * (ndtr(b) - pa))
    elif a > TAIL_SWITCH:
        if (b - a) * a < 1.0:
            return _uniform_window(rng, a, b)
        return _exp_tail(rng, a, b)
    else:
        qb = ndtr(-b)
        z = -ndtri(qb + (1.0 - rng.random()) * (ndtr(-a) - qb))
    if z < a:
        return a
    if z > b:
        return b
    return z


@_jit
def tn_lower_many(rng, mu, sigma, lower):
    out = np.empty(mu.shape[0])
    for i in range(mu.shape[0]):
        out[i] = mu[i] + sigma[i] * tn_lower(rng, (lower[i] - mu[i]) / sigma[i])
    return out


@_jit
def factor_ltn_sweeps(rng, loadings, noise_sd, lower, w_init, n_sweeps, gain, root):
    """Gibbs sweeps for V = L w + s * eps restricted to V > lower.

    ``w`` is a d-vector and ``eps`` an m-vector of independent standard
    normals. One sweep draws eps | w (m independent one-sided truncations),
    each w_j | w_-j, eps (one interval truncation per coordinate), and then
    w | V from the untruncated Gaussian ``N(gain @ V, root root^T)`` with V
    held fixed. The last move is what keeps the chain fast when rows of both
    signs pin w to a narrow interval. Cost is O(m d) per sweep.

    Returns (V, w, status) per chain; status 1 flags an empty interval.
    """
    n_chains, d = w_init.shape
    m = loadings.shape[0]
    v_out = np.empty((n_chains, m))
    w_out = np.empty((n_chains, d))
    status = np.zeros(n_chains, dtype=np.int64)
    lw = np.empty(m)
    eps = np.empty(m)
    for c in range(n_chains):
        w = w_init[c].copy()
        for i in range(m):
            acc = 0.0
            for j in range(d):
                acc += loadings[i, j] * w[j]
            lw[i] = acc
        for _ in range(n_sweeps):
            for i in range(m):
                eps[i] = tn_lower(rng, (lower[i] - lw[i]) / noise_sd[i])
            for j in range(d):
                lo = -np.inf
                hi = np.inf
                for i in range(m):
                    b = loadings[i, j]
                    if b == 0.0:
                        continue
                    t = (lower[i] - noise_sd[i] * eps[i] - (lw[i] - b * w[j])) / b
                    if b > 0.0:
                        if t > lo:
                            lo = t
                    elif t < hi:
                        hi = t
                if lo >= hi:
                    if lo - hi > 1e-9 * (1.0 + abs(lo)):
                        status[c] = 1
                    new = 0.5 * (lo + hi)
                else:
                    new = tn_interval(rng, lo, hi)
                step = new - w[j]
                for i in range(m):
                    lw[i] += loadings[i, j] * step
                w[j] = new
            for i in range(m):
                eps[i] = lw[i] + noise_sd[i] * eps[i]  # eps now holds V
            z = np.empty(d)
            for j in range(d):
                z[j] = rng.standard_normal()
            for j in range(d):
                acc = 0.0
                for i in range(m):
                    acc += gain[j, i] * eps[i]
                for k in range(j + 1):
                    acc += root[j, k] * z[k]
                w[j] = acc
            for i in range(m):
                acc = 0.0
                for j in range(d):
                    acc += loadings[i, j] * w[j]
                v = eps[i]
                lw[i] = acc
                eps[i] = (v - acc) / noise_sd[i]
        for i in range(m):
            v_out[c, i] = lw[i] + noise_sd[i] * eps[i]
        w_out[c] = w
    return v_out, w_out, status
