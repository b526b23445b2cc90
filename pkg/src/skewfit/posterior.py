"""Closed-form SUN posteriors for the skew-normal shape parameter.

With location and scale known, the data enter only through the
standardized values ``y* = (y - xi) / omega`` and the likelihood is
``prod Phi(alpha y*_i)``. A normal or skew-normal prior on ``alpha`` makes
the posterior a SUN whose correlation block is rank one.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import log_ndtr

from ._validation import check_generator
from .distributions import LOG_2, SQRT_2_OVER_PI, log_normal_pdf
from .sun import DEFAULT_SWEEPS, NEAR_ONE, Rank1Correlation, SunParams, sun_sample_d1

MODE_BRACKET = (-200.0, 200.0)
PLATEAU_TOL = 1e-8


class DegenerateDeltaWarning(UserWarning):
    """A loading was clamped away from +/-1."""


class EdgeDivergenceWarning(UserWarning):
    """The posterior mode sits on the search bracket (likelihood runs off to infinity)."""


@dataclass(frozen=True)
class ShapePrior:
    alpha0: float = 0.0
    psi0: float = 1.0

    def __post_init__(self):
        for name in ("alpha0", "psi0"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.psi0 <= 0:
            raise ValueError(f"psi0 must be positive, got {self.psi0}")

    @property
    def lam(self):
        return 0.0

    def logpdf(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        t = (alpha - self.alpha0) / self.psi0
        return log_normal_pdf(t) - np.log(self.psi0)

    def mean(self):
        return self.alpha0


@dataclass(frozen=True)
class NormalPrior(ShapePrior):
    """``alpha ~ N(alpha0, psi0^2)``."""

    kind = "normal"


@dataclass(frozen=True)
class SkewNormalPrior(ShapePrior):
    """``alpha ~ SN(alpha0, psi0, lambda0)``."""

    lambda0: float = 0.0
    kind = "skewnormal"

    def __post_init__(self):
        super().__post_init__()
        value = float(self.lambda0)
        if not np.isfinite(value):
            raise ValueError("lambda0 must be finite")
        object.__setattr__(self, "lambda0", value)

    @property
    def lam(self):
        return self.lambda0

    def logpdf(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        t = (alpha - self.alpha0) / self.psi0
        return LOG_2 + log_normal_pdf(t) + log_ndtr(self.lambda0 * t) - np.log(self.psi0)

    def mean(self):
        d = self.lambda0 / np.sqrt(1.0 + self.lambda0 ** 2)
        return self.alpha0 + self.psi0 * SQRT_2_OVER_PI * d


@dataclass(frozen=True)
class MvShapePrior:
    """Independent per-component priors for a d-vector of shapes."""

    components: Sequence[ShapePrior]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one component")
        if not all(isinstance(c, (NormalPrior, SkewNormalPrior)) for c in comps):
            raise TypeError("components must be NormalPrior or SkewNormalPrior")
        object.__setattr__(self, "components", comps)

    @property
    def d(self):
        return len(self.components)

    def logpdf(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return sum(c.logpdf(alpha[..., j]) for j, c in enumerate(self.components))


def standardize(y, xi, omega):
    return (np.asarray(y, dtype=float) - xi) / omega


def _check_data(y, ndim=1):
    y = np.asarray(y, dtype=float)
    if ndim == 1:
        y = y.reshape(-1)
    if y.shape[0] < 1 and ndim == 1:
        raise ValueError("need at least one observation")
    if not np.all(np.isfinite(y)):
        raise ValueError("standardized data must be finite")
    return y


def _loadings(b):
    """``b / sqrt(1 + b^2)`` with magnitudes clamped below 1 - 1e-12."""
    delta = b / np.sqrt(1.0 + b * b)
    bad = np.abs(delta) >= NEAR_ONE
    if np.any(bad):
        warnings.warn(
            f"{int(bad.sum())} loading(s) within 1e-12 of +/-1 were clamped; "
            "standardized data are extreme relative to the prior scale",
            DegenerateDeltaWarning, stacklevel=3,
        )
        delta = np.where(bad, np.sign(delta) * np.nextafter(NEAR_ONE, 0.0), delta)
    return delta


def build_posterior_pi1(prior, y):
    """SUN posterior of ``alpha`` under a normal prior."""
    if not isinstance(prior, NormalPrior):
        raise TypeError("build_posterior_pi1 needs a NormalPrior")
    y = _check_data(y)
    delta = _loadings(prior.psi0 * y)
    return SunParams(
        xi=[prior.alpha0],
        gamma=delta * prior.alpha0 / prior.psi0,
        omega=[prior.psi0],
        Omega=[[1.0]],
        Delta=delta[:, None],
        Gamma=Rank1Correlation(delta),
    )


def build_posterior_pi2(prior, y):
    """SUN posterior of ``alpha`` under a skew-normal prior.

    The prior's own ``Phi(lambda0 (alpha - alpha0) / psi0)`` factor becomes
    one extra truncation row with ``gamma = 0``.
    """
    if not isinstance(prior, SkewNormalPrior):
        raise TypeError("build_posterior_pi2 needs a SkewNormalPrior")
    y = _check_data(y)
    z = np.append(y, prior.lambda0 / prior.psi0)
    delta = _loadings(prior.psi0 * z)
    gamma = np.append(delta[:-1] * prior.alpha0 / prior.psi0, 0.0)
    return SunParams(
        xi=[prior.alpha0],
        gamma=gamma,
        omega=[prior.psi0],
        Omega=[[1.0]],
        Delta=delta[:, None],
        Gamma=Rank1Correlation(delta),
    )


def build_posterior(prior, y):
    if isinstance(prior, SkewNormalPrior):
        return build_posterior_pi2(prior, y)
    if isinstance(prior, NormalPrior):
        return build_posterior_pi1(prior, y)
    if isinstance(prior, MvShapePrior):
        return build_posterior_mv(prior, y)
    raise TypeError(f"unsupported prior {type(prior).__name__}")


def build_posterior_mv(prior, y):
    """SUN_{d, n+k} posterior of a shape vector; ``y`` is (n, d) standardized.

    Each data row ``y_i`` and each skew-normal prior component ``j``
    (design row ``(lambda_j / psi_j) e_j``) contributes one truncation row.
    With ``b_i = psi * z_i`` the row loading is ``b_i / sqrt(1 + |b_i|^2)``
    and ``Gamma`` has unit diagonal and off-diagonal ``delta_i . delta_j``.
    Rows are ordered data first, then prior rows in component order.
    """
    if not isinstance(prior, MvShapePrior):
        raise TypeError("build_posterior_mv needs an MvShapePrior")
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, d = y.shape
    if d != prior.d:
        raise ValueError(f"data have {d} columns but the prior has {prior.d} components")
    if not np.all(np.isfinite(y)):
        raise ValueError("standardized data must be finite")
    alpha0 = np.array([c.alpha0 for c in prior.components])
    psi = np.array([c.psi0 for c in prior.components])
    skew = [j for j, c in enumerate(prior.components) if isinstance(c, SkewNormalPrior)]
    design = np.zeros((len(skew), d))
    for row, j in enumerate(skew):
        design[row, j] = prior.components[j].lambda0 / psi[j]
    z = np.vstack([y, design])
    offset = np.concatenate([y @ alpha0, np.zeros(len(skew))])
    b = z * psi
    scale = 1.0 / np.sqrt(1.0 + np.sum(b * b, axis=1))
    if d == 1:
        delta = _loadings(b[:, 0])
        return SunParams(xi=alpha0, gamma=offset * np.sqrt(1.0 - delta ** 2), omega=psi,
                         Omega=[[1.0]], Delta=delta[:, None], Gamma=Rank1Correlation(delta))
    Delta = b * scale[:, None]
    norms = np.sum(Delta * Delta, axis=1)
    bad = np.flatnonzero(norms >= NEAR_ONE)
    if bad.size:
        raise ValueError(
            f"row {int(bad[0])} of the assembled Delta has norm within 1e-12 of 1; "
            "Omega* would not be positive definite"
        )
    Gamma = Delta @ Delta.T
    np.fill_diagonal(Gamma, 1.0)
    return SunParams(xi=alpha0, gamma=offset * scale, omega=psi, Omega=np.eye(d),
                     Delta=Delta, Gamma=Gamma)


def log_posterior_unnorm(prior, y, alpha):
    """Log prior plus log likelihood of standardized data, up to a constant.

    ``alpha`` may be a scalar or an array of evaluation points (for a
    multivariate prior, an array whose last axis has length d).
    """
    if isinstance(prior, MvShapePrior):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        alpha = np.asarray(alpha, dtype=float)
        lik = np.sum(log_ndtr(alpha @ y.T), axis=-1) if y.shape[0] else 0.0
        return prior.logpdf(alpha) + lik
    y = np.asarray(y, dtype=float).reshape(-1)
    alpha = np.asarray(alpha, dtype=float)
    lik = np.sum(log_ndtr(alpha[..., None] * y), axis=-1)
    out = prior.logpdf(alpha) + lik
    return float(out) if out.ndim == 0 else out


class PosteriorMoments(NamedTuple):
    mean: float
    variance: float
    mc_se: float


def posterior_moments_mc(s, n_draws, rng=None, n_sweeps=DEFAULT_SWEEPS):
    """Monte Carlo mean and variance of a one-dimensional SUN posterior.

    ``mc_se`` is the standard error of the mean; draws come from
    independent chains.
    """
    if n_draws < 2:
        raise ValueError("n_draws must be at least 2")
    rng = check_generator(rng)
    draws = sun_sample_d1(s, n_sweeps=n_sweeps, rng=rng, size=n_draws)
    var = draws.var(ddof=1)
    return PosteriorMoments(float(draws.mean()), float(var), float(np.sqrt(var / n_draws)))


_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, tol=1e-6):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns the argmax."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def posterior_mode(prior, y, bracket=MODE_BRACKET, tol=1e-6):
    """Posterior mode of ``alpha`` by golden-section search.

    The log posterior is concave, so the search is exact up to ``tol``.
    A mode on the bracket edge signals a likelihood that keeps increasing
    (for instance, all standardized data of one sign under a vague prior);
    so does a log posterior within ``PLATEAU_TOL`` of its edge value. Both
    raise :class:`EdgeDivergenceWarning`.
    """
    y = _check_data(y)
    lo, hi = bracket
    f = lambda a: log_posterior_unnorm(prior, y, a)  # noqa: E731
    x = golden_section_max(f, lo, hi, tol)
    # near the edge, or on a plateau that reaches it: a near-flat prior with
    # one-signed data leaves the likelihood saturated long before the edge
    edge = lo if x - lo < hi - x else hi
    if abs(x - edge) < 10.0 * tol or f(x) - f(edge) < PLATEAU_TOL:
        warnings.warn(
            f"posterior mode {x:.6g} is on the search bracket [{lo}, {hi}]",
            EdgeDivergenceWarning, stacklevel=2,
        )
    return x
