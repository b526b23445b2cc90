"""Unified skew-normal (SUN) distributions.

``Z ~ SUN_{d,m}(xi, gamma, omega, Omega, Delta, Gamma)`` has density

    phi_d(z - xi; w Omega w) * Phi_m(gamma + Delta Omega^-1 w^-1 (z - xi);
                                     Gamma - Delta Omega^-1 Delta^T)
                             / Phi_m(gamma; Gamma)

with ``w = diag(omega)``. Sampling uses the additive representation
``Z = xi + w (Delta^T Gamma^-1 V0 + V1)`` where ``V0`` is ``N_m(0, Gamma)``
truncated below at ``-gamma`` and ``V1`` an independent normal.

Posteriors for the skew-normal shape parameter have
``Gamma - Delta Omega^-1 Delta^T`` diagonal, so ``V0`` factors as a few
shared normals plus independent noise. The samplers here require that
structure; for ``d = 1`` it is the rank-one correlation
``Gamma = I - D(delta)^2 + delta delta^T``.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, ndtr, ndtri

from . import _kernels
from ._validation import check_finite, check_generator

PSD_TOL = 1e-10
NEAR_ONE = 1.0 - 1e-12
DEFAULT_SWEEPS = 50


class NearSingularCorrelation(ValueError):
    """A loading is too close to +/-1 for a stable closed-form inverse."""


class InfeasibleTruncation(RuntimeError):
    """The truncation region is numerically empty."""


class ApproximationWarning(UserWarning):
    """A Monte Carlo integral did not reach its target accuracy."""


@dataclass(frozen=True)
class Rank1Correlation:
    """Correlation matrix ``I - D(delta)^2 + delta delta^T`` kept in factored form."""

    delta: np.ndarray

    def __post_init__(self):
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if delta.ndim != 1:
            raise ValueError("delta must be a vector")
        if not np.all(np.abs(delta) < 1.0):
            raise ValueError("all |delta_i| must be below 1")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    @property
    def m(self):
        return self.delta.shape[0]

    @property
    def noise_sd(self):
        d = self.delta
        return np.sqrt((1.0 - d) * (1.0 + d))

    def dense(self):
        d = self.delta
        out = np.outer(d, d)
        np.fill_diagonal(out, 1.0)
        return out

    def solve(self, v):
        """``Gamma^-1 v`` in O(m) through the Sherman-Morrison identity."""
        _check_near_singular(self.delta)
        v = np.asarray(v, dtype=float)
        inv_diag = 1.0 / (1.0 - self.delta ** 2)
        u = self.delta * inv_diag
        denom = 1.0 + np.sum(self.delta * u)
        return inv_diag * v - u * (u @ v) / denom

    def log_orthant(self, upper):
        """``log Phi_m(upper; Gamma)`` as a one-dimensional integral.

        With ``V = delta W + s eps`` the orthant probability is
        ``int phi(w) prod Phi((upper_i + delta_i w) / s_i) dw``.
        """
        upper = np.asarray(upper, dtype=float)
        s = self.noise_sd
        loadings = self.delta[:, None]
        mode, curv = _laplace_fit(loadings, s, upper)
        mode = float(mode[0])
        scale = 1.0 / np.sqrt(float(curv[0, 0]))

        def logf(w):
            return -0.5 * w * w + np.sum(log_ndtr((upper + self.delta * w) / s))

        peak = logf(mode)
        # curvature is at least 1 everywhere, so +/-40 bounds the mass
        points = [mode + k * scale for k in (-10.0, -3.0, 0.0, 3.0, 10.0)]
        val, _ = integrate.quad(lambda w: np.exp(logf(w) - peak), mode - 40.0,
                                mode + 40.0, points=points, epsabs=0.0,
                                epsrel=1e-12, limit=400)
        return peak + np.log(val) - 0.5 * np.log(2.0 * np.pi)


def _check_near_singular(delta):
    if np.any(np.abs(delta) >= NEAR_ONE):
        worst = int(np.argmax(np.abs(delta)))
        raise NearSingularCorrelation(
            f"|delta_{worst}| = {abs(delta[worst])!r} is within 1e-12 of 1"
        )


@dataclass(frozen=True)
class SunParams:
    xi: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    Omega: np.ndarray
    Delta: np.ndarray
    Gamma: object  # dense (m, m) array or Rank1Correlation

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        Omega = np.atleast_2d(np.asarray(self.Omega, dtype=float))
        Delta = np.asarray(self.Delta, dtype=float)
        d, m = xi.shape[0], gamma.shape[0]
        if Delta.ndim == 1:
            Delta = Delta.reshape(m, d)
        if omega.shape != (d,) or Omega.shape != (d, d) or Delta.shape != (m, d):
            raise ValueError(
                f"inconsistent SUN dimensions: d={d}, m={m}, omega {omega.shape}, "
                f"Omega {Omega.shape}, Delta {Delta.shape}"
            )
        for name, arr in (("xi", xi), ("gamma", gamma), ("omega", omega),
                          ("Omega", Omega), ("Delta", Delta)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(omega <= 0):
            raise ValueError("omega entries must be positive")
        if not np.allclose(np.diag(Omega), 1.0, atol=1e-12):
            raise ValueError("Omega must have a unit diagonal")
        Gamma = self.Gamma
        if isinstance(Gamma, Rank1Correlation):
            if Gamma.m != m:
                raise ValueError("Gamma dimension does not match gamma")
        else:
            Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
            if Gamma.shape != (m, m):
                raise ValueError(f"Gamma must be ({m}, {m}), got {Gamma.shape}")
            if not np.allclose(np.diag(Gamma), 1.0, atol=1e-12):
                raise ValueError("Gamma must have a unit diagonal")
        for name, arr in (("xi", xi), ("gamma", gamma), ("omega", omega),
                          ("Omega", Omega), ("Delta", Delta)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "Gamma", Gamma)
        self._check_psd()

    @property
    def d(self):
        return self.xi.shape[0]

    @property
    def m(self):
        return self.gamma.shape[0]

    @property
    def is_rank1(self):
        return (
            isinstance(self.Gamma, Rank1Correlation)
            and self.d == 1
            and np.array_equal(self.Gamma.delta, self.Delta[:, 0])
        )

    def gamma_dense(self):
        if isinstance(self.Gamma, Rank1Correlation):
            return self.Gamma.dense()
        return self.Gamma

    def conditional_cov(self):
        """``Gamma - Delta Omega^-1 Delta^T``."""
        if self.is_rank1:
            return np.diag(self.Gamma.noise_sd ** 2)
        return self.gamma_dense() - self.Delta @ np.linalg.solve(self.Omega, self.Delta.T)

    def _check_psd(self):
        if self.is_rank1:
            return  # |delta| < 1 already makes Omega* PSD
        try:
            np.linalg.cholesky(self.Omega)
        except np.linalg.LinAlgError:
            raise ValueError("Omega must be positive definite") from None
        cond = self.conditional_cov()
        cond = 0.5 * (cond + cond.T)
        lam = np.linalg.eigvalsh(cond) if cond.size else np.zeros(0)
        if lam.size and lam[0] < -PSD_TOL:
            raise ValueError(
                f"Omega* is not positive semidefinite (Gamma - Delta Omega^-1 Delta^T "
                f"has eigenvalue {lam[0]:.3g})"
            )


def rank1_precision(c):
    """Closed-form inverse of ``I - D(delta)^2 + delta delta^T`` in O(m^2)."""
    delta = c.delta
    _check_near_singular(delta)
    inv_diag = 1.0 / (1.0 - delta ** 2)
    u = delta * inv_diag
    out = -np.outer(u, u) / (1.0 + np.sum(delta * u))
    out[np.diag_indices_from(out)] += inv_diag
    return out


def rank1_solve(c, v):
    return c.solve(v)


# --------------------------------------------------------------------------
# multivariate normal cdf (test oracle path)

@dataclass(frozen=True)
class MvnLogCdf:
    value: float
    rel_error: float
    n_points: int


def _prev_prime(n):
    n = max(int(n), 3)
    while any(n % k == 0 for k in range(2, int(n ** 0.5) + 1)):
        n -= 1
    return n


@lru_cache(maxsize=64)
def _korobov_generator(n, s, n_candidates=64):
    """Korobov vector ``(1, a, a^2, ...) mod n`` with the smallest P_2 among candidates."""
    cand_rng = np.random.default_rng(1009 * n + s)
    k = np.arange(n)[:, None]
    best, best_z = np.inf, None
    for a in cand_rng.integers(2, n - 1, size=n_candidates):
        z = np.array([pow(int(a), j, n) for j in range(s)])
        x = (k * z % n) / n
        p2 = np.mean(np.prod(1.0 + 2.0 * np.pi ** 2 * (x * x - x + 1.0 / 6.0), axis=1))
        if p2 < best:
            best, best_z = p2, z
    return best_z


def _genz_batch(upper, chol, u):
    n, m = u.shape[0], chol.shape[0]
    y = np.zeros((n, m))
    f = np.ones(n)
    for i in range(m):
        shift = y[:, :i] @ chol[i, :i]
        e = ndtr((upper[i] - shift) / chol[i, i])
        f *= e
        if i < m - 1:
            y[:, i] = ndtri(np.clip(u[:, i] * e, 1e-300, 1.0 - 1e-16))
    return f


def mvn_logcdf(upper, cov, budget=2 ** 16, rng=None, rtol=1e-6):
    """``log P(X <= upper)`` for ``X ~ N(0, cov)``.

    Exact for one dimension and for diagonal ``cov``; otherwise randomized
    lattice quasi-Monte Carlo on Genz's separation-of-variables integrand
    with at most ``budget`` integrand evaluations: 12 random shifts of a
    Korobov lattice, tent-periodized. The reported error is three standard
    errors across shifts.
    """
    upper = np.asarray(upper, dtype=float)
    if isinstance(cov, Rank1Correlation):
        return MvnLogCdf(float(cov.log_orthant(upper)), 0.0, 0)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    m = upper.shape[0]
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    off = cov - np.diag(np.diag(cov))
    if m == 1 or np.max(np.abs(off), initial=0.0) <= 1e-12 * max(np.max(sd), 1.0) ** 2:
        with np.errstate(divide="ignore"):
            z = np.where(sd > 0, upper / np.where(sd > 0, sd, 1.0),
                         np.where(upper >= 0, np.inf, -np.inf))
        return MvnLogCdf(float(np.sum(log_ndtr(z))), 0.0, 0)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(cov + 1e-12 * np.eye(m))
    rng = check_generator(12345 if rng is None else rng)
    n_shifts = 12
    n_per = _prev_prime(max(budget // n_shifts, 17))
    gen = _korobov_generator(n_per, m - 1)
    base = (np.arange(n_per)[:, None] * gen % n_per) / n_per
    estimates = np.empty(n_shifts)
    for s in range(n_shifts):
        u = (base + rng.random(m - 1)) % 1.0
        u = np.abs(2.0 * u - 1.0)  # tent periodization
        estimates[s] = _genz_batch(upper, chol, u).mean()
    p = estimates.mean()
    se = estimates.std(ddof=1) / np.sqrt(n_shifts)
    rel = 3.0 * se / p if p > 0 else np.inf
    if rel > rtol:
        warnings.warn(
            f"multivariate normal cdf reached relative error {rel:.2e} with "
            f"{n_per * n_shifts} points (target {rtol:.0e})",
            ApproximationWarning, stacklevel=2,
        )
    return MvnLogCdf(float(np.log(p)), float(rel), n_per * n_shifts)


@dataclass(frozen=True)
class SunLogDensity:
    value: float
    rel_error: float
    approximate: bool

    def __float__(self):
        return self.value


def sun_logpdf(s, z, mvn_cdf_budget=2 ** 16):
    """Log SUN density at ``z``, for checking other code paths.

    Intended for small problems (``d <= 3``, ``m <= 20`` in general; the
    rank-one and diagonal cases are exact for any ``m``).
    """
    z = check_finite(z, "z").reshape(-1)
    if z.shape[0] != s.d:
        raise ValueError(f"expected a point of dimension {s.d}, got {z.shape[0]}")
    t = (z - s.xi) / s.omega
    chol = np.linalg.cholesky(s.Omega)
    u = np.linalg.solve(chol, t)
    log_phi = -0.5 * u @ u - np.sum(np.log(np.diag(chol))) - np.sum(np.log(s.omega)) \
        - 0.5 * s.d * np.log(2.0 * np.pi)
    arg = s.gamma + s.Delta @ np.linalg.solve(s.Omega, t)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ApproximationWarning)
        num = mvn_logcdf(arg, s.conditional_cov(), budget=mvn_cdf_budget)
        den = mvn_logcdf(s.gamma, s.Gamma, budget=mvn_cdf_budget)
    rel = num.rel_error + den.rel_error
    approximate = bool(caught)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    return SunLogDensity(float(log_phi + num.value - den.value), rel, approximate)


# --------------------------------------------------------------------------
# samplers

def truncnorm_1d(mu, sigma, lower, rng=None):
    """One draw from ``N(mu, sigma^2)`` restricted to ``(lower, inf)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = check_generator(rng)
    return mu + sigma * _kernels.tn_lower(rng, (lower - mu) / sigma)


def _inverse_mills(u):
    return np.exp(-0.5 * u * u - 0.5 * np.log(2.0 * np.pi) - log_ndtr(u))


def _laplace_fit(loadings, noise_sd, gamma):
    """Mode and negative Hessian of ``-|w|^2/2 + sum log Phi((gamma + L w) / s)``.

    The function is strictly concave, so damped Newton from zero converges.
    """
    m, d = loadings.shape
    scaled = loadings / noise_sd[:, None]
    g0 = gamma / noise_sd

    def value(w):
        return -0.5 * w @ w + np.sum(log_ndtr(g0 + scaled @ w))

    w = np.zeros(d)
    f = value(w)
    hess = np.eye(d)
    for _ in range(200):
        u = g0 + scaled @ w
        r = _inverse_mills(u)
        grad = -w + scaled.T @ r
        c = r * (u + r)
        hess = np.eye(d) + (scaled * c[:, None]).T @ scaled
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while True:
            w_new = w + t * step
            f_new = value(w_new)
            if f_new >= f - 1e-12 * abs(f) or t < 1e-10:
                break
            t *= 0.5
        converged = np.max(np.abs(w_new - w)) < 1e-10 * (1.0 + np.max(np.abs(w)))
        w, f = w_new, f_new
        if converged:
            break
    u = g0 + scaled @ w
    r = _inverse_mills(u)
    hess = np.eye(d) + (scaled * (r * (u + r))[:, None]).T @ scaled
    return w, hess


def _start_points(loadings, noise_sd, gamma, n, rng):
    mode, hess = _laplace_fit(loadings, noise_sd, gamma)
    root = np.linalg.cholesky(np.linalg.inv(hess))
    return mode + rng.standard_normal((n, mode.shape[0])) @ root.T


def _factor_posterior(loadings, noise_sd):
    """Gain and covariance root of w | V for ``V = L w + s eps``."""
    scaled = loadings / (noise_sd ** 2)[:, None]
    prec = np.eye(loadings.shape[1]) + loadings.T @ scaled
    gain = np.linalg.solve(prec, scaled.T)
    root = np.linalg.cholesky(np.linalg.inv(prec))
    return np.ascontiguousarray(gain), root


def _run_factor_chain(loadings, noise_sd, gamma, n_sweeps, rng, init, size):
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be at least 1")
    n = 1 if size is None else int(size)
    d = loadings.shape[1]
    if init is None:
        w0 = _start_points(loadings, noise_sd, gamma, n, rng)
    else:
        w0 = np.broadcast_to(np.asarray(init, dtype=float).reshape(-1, d), (n, d)).copy()
    gain, root = _factor_posterior(loadings, noise_sd)
    v0, w, status = _kernels.factor_ltn_sweeps(
        rng, np.ascontiguousarray(loadings), noise_sd, -gamma, w0, int(n_sweeps),
        gain, root,
    )
    if np.any(status):
        raise InfeasibleTruncation("truncation region became numerically empty")
    return v0, w


def ltn_sample_rank1(c, gamma, n_sweeps=DEFAULT_SWEEPS, rng=None, init=None, size=None):
    """Draw ``V0 ~ N_m(0, Gamma)`` truncated below at ``-gamma``.

    ``Gamma`` has the rank-one form of ``c``. The chain state is the shared
    factor ``w`` in ``V0 = delta w + sqrt(1 - delta^2) eps``; ``init`` seeds
    it, otherwise a Laplace approximation of its law is used. Returns an
    ``(m,)`` vector, or ``(size, m)`` from independent chains.
    """
    rng = check_generator(rng)
    gamma = check_finite(gamma, "gamma")
    if gamma.shape != (c.m,):
        raise ValueError("gamma must match the correlation dimension")
    _check_near_singular(c.delta)
    v0, _ = _run_factor_chain(c.delta[:, None], c.noise_sd, gamma, n_sweeps, rng, init, size)
    return v0[0] if size is None else v0


def sun_sample_d1(s, n_sweeps=DEFAULT_SWEEPS, rng=None, init=None, size=None):
    """Draw from a ``SUN_{1,m}`` with rank-one ``Gamma``.

    ``init`` is an optional starting value on the standardized scale
    ``(z - xi) / omega``.
    """
    if s.d != 1:
        raise ValueError("sun_sample_d1 needs d = 1")
    rng = check_generator(rng)
    c = s.Gamma if s.is_rank1 else _as_rank1(s)
    v0 = ltn_sample_rank1(c, s.gamma, n_sweeps, rng, init=init,
                          size=1 if size is None else size)
    coef = c.solve(c.delta)
    resid = 1.0 - c.delta @ coef
    if resid < -1e-10:
        raise ValueError(f"1 - Delta^T Gamma^-1 Delta = {resid:.3g} is negative")
    resid = max(resid, 0.0)
    v1 = rng.standard_normal(v0.shape[0])
    z = s.xi[0] + s.omega[0] * (v0 @ coef + np.sqrt(resid) * v1)
    return float(z[0]) if size is None else z


def _as_rank1(s):
    delta = s.Delta[:, 0]
    G = s.gamma_dense()
    expected = np.outer(delta, delta)
    np.fill_diagonal(expected, 1.0)
    if not np.allclose(G, expected, rtol=0, atol=1e-12):
        raise ValueError("Gamma is not of the rank-one form I - D(Delta)^2 + Delta Delta^T")
    return Rank1Correlation(delta)


def _factor_form(s):
    """Loadings in whitened coordinates, noise scales and the Cholesky of Omega."""
    chol = np.linalg.cholesky(s.Omega)
    loadings = np.linalg.solve(chol, s.Delta.T).T  # Delta L^-T
    cond = s.conditional_cov()
    noise_var = np.diag(cond).copy()
    off = cond - np.diag(noise_var)
    if np.max(np.abs(off), initial=0.0) > 1e-10:
        raise NotImplementedError(
            "sampling needs Gamma - Delta Omega^-1 Delta^T to be diagonal"
        )
    if np.any(noise_var <= 1e-24):
        raise NearSingularCorrelation("a truncation coordinate has no free noise")
    return loadings, np.sqrt(noise_var), chol


def sun_sample_md(s, n_sweeps=DEFAULT_SWEEPS, rng=None, size=None):
    """Draw from a ``SUN_{d,m}`` whose conditional covariance is diagonal."""
    rng = check_generator(rng)
    if s.is_rank1:
        z = sun_sample_d1(s, n_sweeps, rng, size=size)
        return np.atleast_1d(z) if size is None else np.asarray(z)[:, None]
    loadings, noise_sd, _ = _factor_form(s)
    n = 1 if size is None else size
    v0, _ = _run_factor_chain(loadings, noise_sd, s.gamma, n_sweeps, rng, None, n)
    G = s.gamma_dense()
    coef = np.linalg.solve(G, s.Delta)  # Gamma^-1 Delta, (m, d)
    cov1 = s.Omega - s.Delta.T @ coef
    cov1 = 0.5 * (cov1 + cov1.T)
    lam, vec = np.linalg.eigh(cov1)
    if lam[0] < -1e-10:
        raise ValueError("Omega - Delta^T Gamma^-1 Delta is not positive semidefinite")
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    v1 = rng.standard_normal((n, s.d)) @ root.T
    z = s.xi + s.omega * (v0 @ coef + v1)
    return z[0] if size is None else z
