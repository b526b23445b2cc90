import numpy as np
import pytest
from scipy import stats

from skewfit._validation import DataError
from skewfit.distributions import SkewNormalParams, sn_sample
from skewfit.gibbs import (Chain, GibbsConfig, GibbsState, NigPrior, density_bands, geweke_z,
                           joint_distribution_test, run_chain, step_alpha, step_eta,
                           step_xi_omega, summarize, _batch_mean_var)
from skewfit.posterior import NormalPrior, SkewNormalPrior, log_posterior_unnorm, standardize


def _log_joint(y, eta, xi, tau, alpha, nig):
    """log p(xi, tau) + log p(eta | omega) + log p(y | eta, xi, omega, alpha), straight from the model."""
    omega = tau ** -0.5
    d = alpha / np.sqrt(1 + alpha ** 2)
    lp = (stats.gamma.logpdf(tau, nig.a, scale=1 / nig.b)
          + stats.norm.logpdf(xi, nig.xi0, np.sqrt(nig.kappa / tau)))
    lp += np.sum(stats.halfnorm.logpdf(eta, scale=omega))
    lp += np.sum(stats.norm.logpdf(y, xi + d * eta, omega * np.sqrt(1 - d * d)))
    return lp


def test_config_and_prior_validation():
    with pytest.raises(ValueError):
        GibbsConfig(n_iter=10, burn_in=10)
    with pytest.raises(ValueError):
        GibbsConfig(thin=0)
    with pytest.raises(ValueError):
        GibbsConfig(seed=-1)
    with pytest.raises(ValueError):
        NigPrior(kappa=0.0)
    with pytest.raises(ValueError):
        NigPrior(b=np.inf)


def test_nig_prior_sample_moments():
    nig = NigPrior(3.0, 0.5, 6.0, 10.0)
    xi, omega = nig.sample(np.random.default_rng(0), size=200000)
    assert np.mean(omega ** 2) == pytest.approx(10.0 / 5.0, rel=0.02)
    assert np.mean(xi) == pytest.approx(3.0, abs=0.01)


def test_step_eta_is_truncated_normal():
    y = np.full(40000, 1.3)
    state = GibbsState(0.2, 1.5, 2.0, np.zeros_like(y))
    eta = step_eta(state, y, np.random.default_rng(1))
    d = state.delta
    mu, sd = d * (1.3 - 0.2), 1.5 * np.sqrt(1 - d * d)
    ref = stats.truncnorm(-mu / sd, np.inf, loc=mu, scale=sd)
    assert eta.min() >= 0
    assert stats.kstest(eta, ref.cdf).pvalue > 1e-3


@pytest.mark.parametrize("alpha", [0.0, 2.5, -6.0])
def test_conditionals_match_model_density(alpha):
    """The gamma and normal laws of the update are proportional to the joint in tau and xi."""
    from skewfit.gibbs import _xi_omega_update
    rng = np.random.default_rng(2)
    nig = NigPrior(0.5, 2.0, 3.0, 4.0)
    y = sn_sample(SkewNormalParams(1.0, 1.5, alpha), 15, rng)
    eta = np.abs(rng.normal(size=15)) * 1.5
    state = GibbsState(0.8, 1.5, alpha, eta)
    shape, rate, mu_hat, kappa_hat = _xi_omega_update(state, y, nig, "derived")
    taus = np.linspace(0.05, 3.0, 40)
    diff = [_log_joint(y, eta, 0.8, t, alpha, nig) - stats.gamma.logpdf(t, shape, scale=1 / rate)
            for t in taus]
    assert np.ptp(diff) < 1e-9
    xis = np.linspace(-2, 3, 40)
    diff = [_log_joint(y, eta, x, 0.7, alpha, nig)
            - stats.norm.logpdf(x, mu_hat, np.sqrt(kappa_hat / 0.7)) for x in xis]
    assert np.ptp(diff) < 1e-9
    if alpha != 0.0:
        shape, rate, *_ = _xi_omega_update(state, y, nig, "printed")
        diff = [_log_joint(y, eta, 0.8, t, alpha, nig) - stats.gamma.logpdf(t, shape, scale=1 / rate)
                for t in taus]
        assert np.ptp(diff) > 1.0


def _fixed_alpha_oracle(y, alpha, nig):
    xs = np.linspace(-2.5, 2.5, 301)
    ws = np.linspace(0.05, 6.0, 300)
    X, W = np.meshgrid(xs, ws, indexing="ij")
    tau = 1 / W
    lp = (stats.gamma.logpdf(tau, nig.a, scale=1 / nig.b) - 2 * np.log(W)
          + stats.norm.logpdf(X, nig.xi0, np.sqrt(nig.kappa * W)))
    om = np.sqrt(W)
    for v in y:
        t = (v - X) / om
        lp = lp + np.log(2 / om) + stats.norm.logpdf(t) + stats.norm.logcdf(alpha * t)
    p = np.exp(lp - lp.max())
    p /= p.sum()
    return (p * W).sum()


def _fixed_alpha_run(y, alpha, nig, variant, n_iter, seed):
    rng = np.random.default_rng(seed)
    state = GibbsState(0.0, 1.0, alpha, np.zeros_like(y))
    out = np.empty(n_iter)
    for k in range(n_iter):
        state.eta = step_eta(state, y, rng)
        state.xi, state.omega = step_xi_omega(state, y, nig, rng, variant)
        out[k] = state.omega ** 2
    return out[1000:]


def test_location_scale_block_targets_posterior():
    """With alpha held fixed the (eta, xi, omega) sub-chain must target p(xi, omega | y, alpha)."""
    alpha = 3.0
    y = sn_sample(SkewNormalParams(0.0, 1.0, alpha), 20, np.random.default_rng(3))
    nig = NigPrior(0.0, 1.0, 2.0, 2.0)
    exact = _fixed_alpha_oracle(y, alpha, nig)
    w2 = _fixed_alpha_run(y, alpha, nig, "derived", 21000, 4)
    se = np.sqrt(_batch_mean_var(w2, 40))
    assert abs(w2.mean() - exact) < 4 * se
    printed = _fixed_alpha_run(y, alpha, nig, "printed", 21000, 4)
    assert abs(printed.mean() - exact) > 10 * se


def test_step_alpha_targets_shape_posterior():
    y = sn_sample(SkewNormalParams(1.0, 2.0, 4.0), 12, np.random.default_rng(5))
    prior = SkewNormalPrior(0.0, 3.0, 2.0)
    state = GibbsState(1.0, 2.0, 0.0, np.zeros(12))
    rng = np.random.default_rng(6)
    draws = np.empty(6000)
    for k in range(draws.size):
        state.alpha = step_alpha(state, y, prior, rng, n_sweeps=5)
        draws[k] = state.alpha
    g = np.linspace(-20, 40, 4001)
    lp = log_posterior_unnorm(prior, standardize(y, 1.0, 2.0), g)
    w = np.exp(lp - lp.max())
    w /= w.sum()
    assert abs(draws.mean() - w @ g) < 4 * np.sqrt(_batch_mean_var(draws, 30))


@pytest.fixture(scope="module")
def small_fit():
    y = sn_sample(SkewNormalParams(5.0, 2.0, 4.0), 60, np.random.default_rng(7))
    cfg = GibbsConfig(n_iter=2500, burn_in=500, seed=11)
    return y, run_chain(y, SkewNormalPrior(0.0, 7.0, 20.0), NigPrior(5.0, 10.0, 2.0, 4.0), cfg)


def test_run_chain_deterministic(small_fit):
    y, chain = small_fit
    again = run_chain(y, SkewNormalPrior(0.0, 7.0, 20.0), NigPrior(5.0, 10.0, 2.0, 4.0),
                      GibbsConfig(n_iter=2500, burn_in=500, seed=11))
    assert np.array_equal(chain.draws, again.draws)
    assert np.array_equal(chain.eta_last, again.eta_last)
    other = run_chain(y, SkewNormalPrior(0.0, 7.0, 20.0), NigPrior(5.0, 10.0, 2.0, 4.0),
                      GibbsConfig(n_iter=2500, burn_in=500, seed=12))
    assert not np.array_equal(chain.draws, other.draws)


def test_chain_labels_and_shape(small_fit):
    _, chain = small_fit
    assert len(chain) == 2000
    assert np.array_equal(chain.draws[:, 1], chain.omega)
    p = chain.params(17)
    assert (p.xi, p.omega, p.alpha) == (chain.xi[17], chain.omega[17], chain.alpha[17])
    assert not chain.alpha.flags.writeable
    assert np.all(chain.eta_last >= 0) and chain.eta_last.shape == (60,)
    assert set(chain.diagnostics) == {"xi", "omega", "alpha"}


def test_thinning():
    y = sn_sample(SkewNormalParams(0, 1, 1), 20, np.random.default_rng(8))
    chain = run_chain(y, NormalPrior(0, 3), NigPrior(), GibbsConfig(n_iter=105, burn_in=5, thin=10))
    assert len(chain) == 10


def test_posterior_covers_truth(small_fit):
    _, chain = small_fit
    s = summarize(chain)
    for name, truth in (("xi", 5.0), ("omega", 2.0), ("alpha", 4.0)):
        assert s[name].lo95 < truth < s[name].hi95
        assert s[name].lo95 <= s[name].mean <= s[name].hi95


def test_alpha_interval_contracts():
    prior, nig = SkewNormalPrior(0.0, 1.0, 3.0), NigPrior(0.0, 100.0, 1.0, 1.0)
    medians = []
    for n in (50, 200, 800):
        widths = []
        for seed in range(10):
            y = sn_sample(SkewNormalParams(0.0, 1.0, 1.5), n, np.random.default_rng(1000 * n + seed))
            s = summarize(run_chain(y, prior, nig, GibbsConfig(n_iter=800, burn_in=200, seed=seed,
                                                             ltn_sweeps=10)))
            widths.append(s["alpha"].hi95 - s["alpha"].lo95)
        medians.append(np.median(widths))
    assert medians[0] >= medians[1] >= medians[2]


def test_geweke_on_fitted_chain(small_fit):
    _, chain = small_fit
    assert all(abs(z) < 3 for z in chain.diagnostics.values())


def test_density_bands(small_fit):
    y, chain = small_fit
    grid = np.linspace(-5, 25, 3001)
    bands = density_bands(chain, grid, block=333)
    assert np.trapezoid(bands.mean, grid) == pytest.approx(1.0, abs=1e-4)
    assert np.all(bands.lo95 <= bands.hi95)
    # in the far tails a handful of draws can push the mean above the 97.5%
    # percentile; over the data range the envelope contains it
    bulk = (grid >= y.min()) & (grid <= y.max())
    assert np.all(bands.lo95[bulk] <= bands.mean[bulk])
    assert np.all(bands.mean[bulk] <= bands.hi95[bulk])
    assert np.all(bands.lo95 >= 0)
    assert np.allclose(density_bands(chain, grid).mean, bands.mean, rtol=1e-12)


def test_density_bands_single_draw():
    cfg = GibbsConfig(n_iter=1, burn_in=0)
    chain = Chain([1.0], [2.0], [-3.0], np.ones(3), cfg)
    grid = np.linspace(-4, 6, 11)
    t = (grid - 1.0) / 2.0
    ref = 2 / 2.0 * stats.norm.pdf(t) * stats.norm.cdf(-3.0 * t)
    for band in density_bands(chain, grid):
        assert np.allclose(band, ref, rtol=1e-13, atol=1e-300)


def test_summarize_constant_chain():
    cfg = GibbsConfig(n_iter=10, burn_in=0)
    chain = Chain(np.full(10, 1.0), np.full(10, 2.0), np.full(10, 3.0), np.ones(4), cfg)
    s = summarize(chain)
    assert s["omega"] == (2.0, 2.0, 2.0)


def test_chain_rejects_bad_draws():
    cfg = GibbsConfig(n_iter=10, burn_in=0)
    with pytest.raises(ValueError):
        Chain(np.zeros(2), np.array([1.0, -1.0]), np.zeros(2), np.ones(3), cfg)
    with pytest.raises(ValueError):
        Chain(np.zeros(2), np.ones(2), np.array([0.0, np.nan]), np.ones(3), cfg)


def test_refuses_tiny_samples():
    with pytest.raises(DataError):
        run_chain([1.0, 2.0], NormalPrior(), NigPrior())
    with pytest.raises(TypeError):
        run_chain([1.0, 2.0, 3.0], "normal", NigPrior())


def test_geweke_z_null_and_drift():
    rng = np.random.default_rng(9)
    zs = np.array([geweke_z(rng.normal(size=2000)) for _ in range(200)])
    assert 0.8 < zs.std() < 1.3
    assert abs(zs.mean()) < 0.25
    ramp = np.arange(2000.0) + rng.normal(size=2000)
    assert abs(geweke_z(ramp)) > 10
    assert geweke_z(np.ones(400)) == 0.0


def test_joint_distribution_smoke():
    z = joint_distribution_test(5, SkewNormalPrior(0.0, 2.0, 3.0), NigPrior(0.0, 1.0, 6.0, 5.0),
                                n_cycles=2000, seed=3, n_sweeps=10)
    assert set(z) == {"xi", "xi^2", "omega2", "omega2^2", "alpha", "alpha^2", "eta1", "eta1^2"}
    assert max(abs(v) for v in z.values()) < 4
