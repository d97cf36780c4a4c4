"""Group-sparse event denoiser against small closed-form oracles."""

import math

import numpy as np
import pytest

from fogtbma.config import DeviceAssignment, SystemConfig
from fogtbma.denoiser import (EventGroupDenoiser, GaussianDenoiser, GroupPrior,
                              block_log_weights, block_posterior,
                              coefficient_moments, compute_llrs, logsumexp)


def two_hypothesis_posterior(r, gamma, tau, rho):
    """Direct density-ratio oracle for one coefficient, one event, R=1.

    Active: r ~ CN(0, gamma + tau); inactive: r ~ CN(0, tau).
    """
    def cn_pdf(v, var):
        return math.exp(-abs(v) ** 2 / var) / (math.pi * var)

    w0 = (1.0 - rho) * cn_pdf(r, tau)
    w1 = rho * cn_pdf(r, gamma + tau)
    return np.array([w0, w1]) / (w0 + w1)


def simple_prior(rho=0.5, gamma=1.0, num_nodes=1, zero_transmits=False):
    return GroupPrior(prior=np.array([1.0 - rho, rho]),
                      group_var=np.array([gamma]),
                      num_nodes=num_nodes,
                      zero_value_transmits=zero_transmits)


def test_single_coefficient_odds():
    # gamma = tau = 1, rho = 1/2: active odds are exp(|r|^2/2) / 2
    prior = simple_prior()
    for r_val in (0.3 + 0.4j, 1.5, -2.0j):
        r = np.array([[0.0, r_val]])  # (nodes=1, M*(R+1)=2)
        post = block_posterior(r, np.ones((1, 2)), prior)
        odds = post[0, 1] / post[0, 0]
        assert odds == pytest.approx(0.5 * math.exp(abs(r_val) ** 2 / 2), rel=1e-12)


@pytest.mark.parametrize("gamma,tau,rho", [(1.0, 1.0, 0.5), (2.5, 0.3, 0.1),
                                           (0.7, 1.9, 0.9)])
def test_matches_density_ratio_oracle(gamma, tau, rho):
    prior = simple_prior(rho, gamma)
    rng = np.random.default_rng(0)
    for _ in range(20):
        r_val = rng.standard_normal() + 1j * rng.standard_normal()
        r = np.array([[0.0, r_val]])
        post = block_posterior(r, np.full((1, 2), tau), prior)
        expected = two_hypothesis_posterior(r_val, gamma, tau, rho)
        assert np.allclose(post[0], expected, atol=1e-12)


def test_flat_likelihood_recovers_prior():
    cfg = SystemConfig(num_events=3, num_values=2, num_devices=6,
                       activation_prob=0.2)
    prior = GroupPrior.from_configs(cfg, DeviceAssignment.round_robin(6, 3),
                                    num_nodes=1)
    r = np.ones((1, cfg.num_coefficients), dtype=np.complex128)
    post = block_posterior(r, np.full((1, cfg.num_coefficients), 1e12), prior)
    from fogtbma.config import event_prior
    assert np.allclose(post, event_prior(cfg)[None, :], atol=1e-9)


def test_zero_observation_favors_inactive():
    cfg = SystemConfig(num_events=4, num_values=3, num_devices=8,
                       activation_prob=0.1)
    prior = GroupPrior.from_configs(cfg, DeviceAssignment.round_robin(8, 4),
                                    num_nodes=1)
    r = np.zeros((1, cfg.num_coefficients), dtype=np.complex128)
    post = block_posterior(r, np.ones((1, cfg.num_coefficients)), prior)
    assert np.all(np.argmax(post, axis=-1) == 0)


def test_posterior_rows_normalized():
    prior = simple_prior(rho=0.2, gamma=1.7, num_nodes=2)
    rng = np.random.default_rng(1)
    r = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
    tau = rng.uniform(0.2, 2.0, (5, 2, 2))
    post = block_posterior(r, tau, prior)
    assert post.shape == (5, 1, 2)
    assert np.allclose(post.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(post >= 0)


def test_multinode_evidence_is_additive():
    """The two-node log weight is the sum of per-node log weights minus
    one duplicated log prior."""
    prior2 = simple_prior(rho=0.3, gamma=1.2, num_nodes=2)
    prior1 = simple_prior(rho=0.3, gamma=1.2, num_nodes=1)
    rng = np.random.default_rng(2)
    r = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    tau = rng.uniform(0.3, 1.5, (2, 2))
    logw2 = block_log_weights(r, tau, prior2)
    log_prior = np.log(prior2.prior)
    parts = [block_log_weights(r[c:c + 1], tau[c:c + 1], prior1) - log_prior
             for c in range(2)]
    assert np.allclose(logw2, log_prior + parts[0] + parts[1], atol=1e-12)


def test_coefficient_moments_match_mixture_oracle():
    cfg = SystemConfig(num_events=2, num_values=2, num_devices=4,
                       activation_prob=0.25)
    asn = DeviceAssignment.round_robin(4, 2)
    prior = GroupPrior.from_configs(cfg, asn, num_nodes=1)
    rng = np.random.default_rng(3)
    j = cfg.num_coefficients
    r = (rng.standard_normal((1, j)) + 1j * rng.standard_normal((1, j)))
    tau = rng.uniform(0.2, 1.5, (1, j))
    post = block_posterior(r, tau, prior)
    x_hat, tau_x = coefficient_moments(r, tau, post, prior)

    width = cfg.num_values + 1
    mask = prior.hypothesis_mask()
    for m in range(cfg.num_events):
        gamma = prior.group_var[m]
        for u in range(width):
            jj = m * width + u
            # mixture of a zero point mass and one on-Gaussian
            comps = []
            for v in range(width):
                w = post[m, v]
                if v == u and mask[v]:
                    sh = gamma / (gamma + tau[0, jj])
                    comps.append((w, sh * r[0, jj], sh * tau[0, jj]))
                else:
                    comps.append((w, 0.0, 0.0))
            mean = sum(w * mu for w, mu, _ in comps)
            second = sum(w * (abs(mu) ** 2 + var) for w, mu, var in comps)
            assert x_hat[0, jj] == pytest.approx(mean, abs=1e-12)
            assert tau_x[0, jj] == pytest.approx(second - abs(mean) ** 2, abs=1e-12)


def test_always_transmit_models_value_zero():
    prior = simple_prior(rho=0.5, gamma=2.0, zero_transmits=True)
    assert prior.hypothesis_mask().tolist() == [1.0, 1.0]
    # strong coefficient on the value-0 slot now pulls toward inactive
    r = np.array([[3.0, 0.0]])
    post = block_posterior(r, np.ones((1, 2)), prior)
    assert post[0, 0] > post[0, 1]


def test_prior_variance_mixture():
    cfg = SystemConfig(num_events=2, num_values=1, num_devices=6,
                       activation_prob=0.4, channel_var=0.5)
    asn = DeviceAssignment.round_robin(6, 2)
    den = EventGroupDenoiser(GroupPrior.from_configs(cfg, asn, num_nodes=1))
    var = den.prior_variance()
    gamma = 3 * 0.5  # three devices per event
    # value-0 slot carries no energy, active slot carries rho/R * gamma
    expected = np.array([0.0, 0.4 * gamma, 0.0, 0.4 * gamma])
    assert np.allclose(var, np.maximum(expected, den.variance_floor))


def test_llr_clamp_and_degenerate_posteriors():
    post = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
    llrs = compute_llrs(post, llr_clamp=50.0)
    assert llrs[0, 0] == 50.0
    assert llrs[1, 0] == -50.0
    assert llrs[2, 0] == pytest.approx(0.0)


def test_denoiser_call_contract():
    cfg = SystemConfig(num_events=3, num_values=2, num_devices=6,
                       activation_prob=0.15)
    asn = DeviceAssignment.round_robin(6, 3)
    den = EventGroupDenoiser(GroupPrior.from_configs(cfg, asn, num_nodes=2))
    rng = np.random.default_rng(4)
    j = cfg.num_coefficients
    r = rng.standard_normal((5, 2, j)) + 1j * rng.standard_normal((5, 2, j))
    tau = rng.uniform(0.1, 1.0, (5, 2, j))
    x_hat, tau_x, extras = den(r, tau)
    assert x_hat.shape == r.shape and tau_x.shape == r.shape
    assert np.all(tau_x >= den.variance_floor)
    assert extras["posterior"].shape == (5, 3, 3)
    assert extras["llrs"].shape == (5, 3, 2)
    assert np.all(np.abs(extras["llrs"]) <= den.llr_clamp)
    # llrs agree with the posterior route away from the clamp
    ref = compute_llrs(extras["posterior"], den.llr_clamp)
    sel = np.abs(ref) < 49.0
    assert np.allclose(extras["llrs"][sel], ref[sel], atol=1e-9)


def test_gaussian_denoiser_shrinkage():
    den = GaussianDenoiser(np.array([1.0, 4.0]))
    r = np.array([2.0 + 0j, 2.0 + 0j])
    tau = np.array([1.0, 1.0])
    x_hat, tau_x, _ = den(r, tau)
    assert np.allclose(x_hat, [1.0, 1.6])
    assert np.allclose(tau_x, [0.5, 0.8])


def test_logsumexp_stable():
    a = np.array([-1000.0, -1001.0, -999.0])
    val = logsumexp(a)
    direct = math.log(sum(math.exp(x + 1000) for x in a)) - 1000
    assert val == pytest.approx(direct, abs=1e-12)
    assert np.isfinite(logsumexp(np.array([-np.inf, -np.inf]))) is np.False_
