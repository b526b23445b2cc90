"""Prior elicitation: sign probabilities, prior means and moment matching."""

from typing import NamedTuple

import numpy as np

from .distributions import SkewNormalParams, moments_to_dp, sn_cdf
from .gibbs import NigPrior
from .posterior import NormalPrior, ShapePrior, SkewNormalPrior


def prob_alpha_negative(prior):
    """``Pr(alpha < 0)`` under a shape prior (normal priors have ``lambda0 = 0``)."""
    if not isinstance(prior, ShapePrior):
        raise TypeError("prior must be a NormalPrior or SkewNormalPrior")
    return sn_cdf(SkewNormalParams(prior.alpha0, prior.psi0, prior.lam), 0.0)


def prior_mean_alpha(prior):
    if not isinstance(prior, ShapePrior):
        raise TypeError("prior must be a NormalPrior or SkewNormalPrior")
    return float(prior.mean())


def strength_table(strength):
    """``(psi0, kappa, a)`` for a given strength.

    Strength 1 gives ``psi0 = 1, kappa = 1/4, a = 1``. Doubling the strength
    halves the prior spread of ``alpha`` and of ``xi / omega`` and doubles
    the inverse-gamma shape.
    """
    strength = float(strength)
    if not (np.isfinite(strength) and strength > 0):
        raise ValueError(f"strength must be positive and finite, got {strength}")
    return 1.0 / strength, 0.25 / strength, strength


class ElicitedPrior(NamedTuple):
    shape: NormalPrior
    nig: NigPrior


def elicit_from_moments(m, strength=1.0):
    """Hyperparameters matching a past cohort's mean, sd and skewness.

    The moments are mapped to ``(xi*, omega*, alpha*)``; the shape prior is
    centred at ``alpha*`` and the inverse-gamma is placed so that its mode
    for ``omega^2``, ``b / (a + 1)``, equals ``omega*^2``.
    """
    dp = moments_to_dp(m)
    psi0, kappa, a = strength_table(strength)
    shape = NormalPrior(alpha0=dp.alpha, psi0=psi0)
    nig = NigPrior(xi0=dp.xi, kappa=kappa, a=a, b=(a + 1.0) * dp.omega ** 2)
    return ElicitedPrior(shape, nig)


def fig1_curve(psi0, lambdas):
    """``(lambda0, Pr(alpha < 0))`` pairs for an ``SN(0, psi0, lambda0)`` prior."""
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    probs = [prob_alpha_negative(SkewNormalPrior(0.0, psi0, lam)) for lam in lambdas]
    return np.column_stack([lambdas, probs])
