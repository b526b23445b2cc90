"""Informative Bayesian inference for the skew-normal distribution."""

from ._validation import DataError
from .distributions import (CentralMoments, MvSkewNormalParams, SkewNormalParams,
                            UnrepresentableSkewness, alpha_of_delta, delta_of_alpha,
                            dp_to_moments, excess_kurtosis, moments_to_dp, msn_logpdf,
                            msn_sample, sn_cdf, sn_logpdf, sn_pdf, sn_sample)
from .elicitation import elicit_from_moments, fig1_curve, prior_mean_alpha, prob_alpha_negative
from .estimator import ShapePosterior, SkewNormalBayes
from .gibbs import (Chain, GibbsConfig, NigPrior, density_bands, geweke_z,
                    joint_distribution_test, run_chain, summarize)
from .posterior import (DegenerateDeltaWarning, EdgeDivergenceWarning, MvShapePrior,
                        NormalPrior, SkewNormalPrior, build_posterior, build_posterior_mv,
                        build_posterior_pi1, build_posterior_pi2, log_posterior_unnorm,
                        posterior_mode, posterior_moments_mc)
from .sun import (ApproximationWarning, InfeasibleTruncation, NearSingularCorrelation,
                  Rank1Correlation, SunParams, ltn_sample_rank1, mvn_logcdf, rank1_precision,
                  rank1_solve, sun_logpdf, sun_sample_d1, sun_sample_md, truncnorm_1d)

__version__ = "0.1.0"
