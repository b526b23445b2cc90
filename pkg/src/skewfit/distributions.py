"""Univariate and multivariate skew-normal laws in direct parametrization.

A variable ``Y ~ SN(xi, omega, alpha)`` has density
``2/omega * phi(t) * Phi(alpha * t)`` with ``t = (y - xi) / omega``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr

from ._validation import check_finite, check_generator

LOG_2 = np.log(2.0)
LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

#: Supremum of |skewness| over the skew-normal family (limit delta -> 1).
MAX_SKEWNESS = 0.5 * (4.0 - np.pi) * (2.0 / (np.pi - 2.0)) ** 1.5


class UnrepresentableSkewness(ValueError):
    """Requested skewness lies outside the skew-normal range."""


@dataclass(frozen=True)
class SkewNormalParams:
    xi: float = 0.0
    omega: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("xi", "omega", "alpha"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    @property
    def delta(self):
        return delta_of_alpha(self.alpha)


@dataclass(frozen=True)
class MvSkewNormalParams:
    xi: np.ndarray
    Omega: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        Omega = np.atleast_2d(np.asarray(self.Omega, dtype=float))
        d = xi.shape[0]
        if xi.ndim != 1 or alpha.shape != (d,) or Omega.shape != (d, d):
            raise ValueError(
                f"inconsistent dimensions: xi {xi.shape}, Omega {Omega.shape}, "
                f"alpha {alpha.shape}"
            )
        if not np.allclose(Omega, Omega.T, rtol=0, atol=1e-12):
            raise ValueError("Omega must be symmetric")
        try:
            chol = np.linalg.cholesky(Omega)
        except np.linalg.LinAlgError:
            raise ValueError("Omega must be positive definite") from None
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "Omega", Omega)
        object.__setattr__(self, "_chol", chol)

    @property
    def d(self):
        return self.xi.shape[0]

    @property
    def omega(self):
        """Marginal scales, the square roots of diag(Omega)."""
        return np.sqrt(np.diag(self.Omega))

    @property
    def correlation(self):
        w = self.omega
        return self.Omega / np.outer(w, w)

    @property
    def delta(self):
        corr = self.correlation
        ca = corr @ self.alpha
        return ca / np.sqrt(1.0 + self.alpha @ ca)


@dataclass(frozen=True)
class CentralMoments:
    mean: float
    sd: float
    skewness: float

    def __post_init__(self):
        for name in ("mean", "sd", "skewness"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.sd <= 0:
            raise ValueError(f"sd must be positive, got {self.sd}")


def delta_of_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    out = alpha / np.sqrt(1.0 + alpha * alpha)
    return float(out) if out.ndim == 0 else out


def alpha_of_delta(delta):
    delta = np.asarray(delta, dtype=float)
    out = delta / np.sqrt(1.0 - delta * delta)
    return float(out) if out.ndim == 0 else out


def log_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI


def sn_logpdf(p, y):
    """Log density of ``SN(p.xi, p.omega, p.alpha)`` at ``y`` (array-aware)."""
    y = check_finite(y, "y")
    t = (y - p.xi) / p.omega
    out = LOG_2 - np.log(p.omega) + log_normal_pdf(t) + log_ndtr(p.alpha * t)
    return float(out) if out.ndim == 0 else out


def sn_pdf(p, y):
    return np.exp(sn_logpdf(p, y))


def _sn_cdf_scalar(alpha, t):
    lower = -12.0
    if t <= lower:
        return 0.0
    upper = min(t, 12.0)

    def f(s):
        return 2.0 * np.exp(log_normal_pdf(s) + log_ndtr(alpha * s))

    points = [0.0] if lower < 0.0 < upper else None
    val, _ = integrate.quad(f, lower, upper, points=points, epsabs=1e-13,
                            epsrel=1e-12, limit=200)
    return min(max(val, 0.0), 1.0)


def sn_cdf(p, y):
    """Distribution function by adaptive quadrature of the density.

    Mass outside ``xi +/- 12 omega`` is below 1e-32 and is ignored.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)):
        raise ValueError("y must not contain NaN")
    t = (y - p.xi) / p.omega
    out = np.vectorize(lambda s: _sn_cdf_scalar(p.alpha, s), otypes=[float])(t)
    return float(out) if out.ndim == 0 else out


def sn_sample(p, n, rng=None):
    """Draw ``n`` values through the half-normal hierarchy.

    ``u ~ |N(0, omega^2)|`` and ``y | u ~ N(xi + delta u, (1 - delta^2) omega^2)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = check_generator(rng)
    delta = p.delta
    u = np.abs(rng.standard_normal(n)) * p.omega
    e = rng.standard_normal(n) * p.omega * np.sqrt(1.0 - delta * delta)
    return p.xi + delta * u + e


def msn_logpdf(p, y):
    """Log density of the d-variate skew-normal; ``y`` is (d,) or (k, d)."""
    y = check_finite(y, "y")
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != p.d:
        raise ValueError(f"expected points of dimension {p.d}, got {y.shape[1]}")
    r = y - p.xi
    z = np.linalg.solve(p._chol, r.T)
    logdet = np.sum(np.log(np.diag(p._chol)))
    log_phi = -0.5 * np.sum(z * z, axis=0) - logdet - p.d * LOG_SQRT_2PI
    out = LOG_2 + log_phi + log_ndtr((r / p.omega) @ p.alpha)
    return float(out[0]) if single else out


def msn_sample(p, n, rng=None):
    """Draws sharing one half-normal latent per row: ``Z = delta |U0| + N(0, R - delta delta^T)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = check_generator(rng)
    delta = p.delta
    cov = p.correlation - np.outer(delta, delta)
    # cov is PSD by construction; eigh tolerates exact singularity
    evals, evecs = np.linalg.eigh(cov)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    u0 = np.abs(rng.standard_normal(n))
    z = u0[:, None] * delta + rng.standard_normal((n, p.d)) @ root.T
    return p.xi + z * p.omega


def dp_to_moments(p):
    mu_z = SQRT_2_OVER_PI * p.delta
    var_z = 1.0 - mu_z * mu_z
    skew = 0.5 * (4.0 - np.pi) * mu_z ** 3 / var_z ** 1.5
    return CentralMoments(p.xi + p.omega * mu_z, p.omega * np.sqrt(var_z), skew)


def excess_kurtosis(p):
    """Fourth standardized cumulant; exposed for reference only."""
    mu_z = SQRT_2_OVER_PI * p.delta
    return 2.0 * (np.pi - 3.0) * (mu_z * mu_z / (1.0 - mu_z * mu_z)) ** 2


def moments_to_dp(m):
    """Invert :func:`dp_to_moments` in closed form."""
    if abs(m.skewness) >= MAX_SKEWNESS:
        raise UnrepresentableSkewness(
            f"|skewness| must be below {MAX_SKEWNESS:.7f}, got {m.skewness}"
        )
    # skew = c0 * r^3 with r = mu_z / sqrt(1 - mu_z^2)
    r = np.cbrt(2.0 * m.skewness / (4.0 - np.pi))
    mu_z = r / np.sqrt(1.0 + r * r)
    delta = mu_z / SQRT_2_OVER_PI
    omega = m.sd / np.sqrt(1.0 - mu_z * mu_z)
    return SkewNormalParams(m.mean - omega * mu_z, omega, alpha_of_delta(delta))
