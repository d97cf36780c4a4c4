"""Event-block posterior denoiser for the message-passing decoder.

The prior ties coefficients together per event: hypothesis v for event m
says the (node, m, v) coefficients hold a CN(0, gamma_m) superposition
of the monitoring devices' fades at every node, and every other
coefficient of the block is zero.  gamma_m is the group size times the
fading variance.  Value 0 normally means the whole block is silent;
deployments where devices also transmit the value-0 codeword instead
model that coefficient as CN(0, gamma_m) under hypothesis 0.

Working in the log domain keeps tiny posteriors alive; per-event LLRs
are clamped to +-llr_clamp nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DeviceAssignment, SystemConfig, event_prior

LLR_CLAMP_DEFAULT = 50.0


def logsumexp(a: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return out if keepdims else np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class GroupPrior:
    """Hierarchical prior for all event blocks.

    prior        (R+1,) probabilities of value 0..R per event
    group_var    (M,) variance gamma_m of the superposed group fade
    num_nodes    edge nodes whose blocks a hypothesis spans
    zero_value_transmits  model the value-0 coefficient as an active
                 group fade under hypothesis 0 (always-transmit mode)
    """

    prior: np.ndarray
    group_var: np.ndarray
    num_nodes: int
    zero_value_transmits: bool = False

    @staticmethod
    def from_configs(
        system: SystemConfig,
        assignment: DeviceAssignment,
        num_nodes: int | None = None,
    ) -> "GroupPrior":
        gamma = assignment.group_sizes(system.num_events) * system.channel_var
        return GroupPrior(
            prior=event_prior(system),
            group_var=gamma.astype(np.float64),
            num_nodes=system.num_edge_nodes if num_nodes is None else num_nodes,
            zero_value_transmits=not system.transmit_on_active,
        )

    @property
    def num_events(self) -> int:
        return self.group_var.shape[0]

    @property
    def num_values(self) -> int:
        return self.prior.shape[0] - 1

    def hypothesis_mask(self) -> np.ndarray:
        """1 where hypothesis v makes coefficient (m, v) a group fade."""
        mask = np.ones(self.num_values + 1, dtype=np.float64)
        if not self.zero_value_transmits:
            mask[0] = 0.0
        return mask


def _grouped(arr: np.ndarray, prior: GroupPrior) -> np.ndarray:
    """View (..., nodes, M*(R+1)) as (..., nodes, M, R+1)."""
    m, w = prior.num_events, prior.num_values + 1
    return arr.reshape(arr.shape[:-1] + (m, w))


def block_log_weights(r: np.ndarray, tau_r: np.ndarray, prior: GroupPrior) -> np.ndarray:
    """Unnormalized log posterior weight of each event hypothesis.

    ``r``/``tau_r`` are pseudo-observations shaped (..., nodes, M*(R+1)).
    The constant product of the all-zero-hypothesis densities cancels, so
    the log weight only accumulates, per node, the density ratio of the
    one coefficient the hypothesis turns on.
    """
    rg = _grouped(np.asarray(r), prior)
    tg = _grouped(np.asarray(tau_r, dtype=np.float64), prior)
    gamma = prior.group_var[:, None]  # (M, 1) over values axis
    ratio = gamma / np.maximum(tg, 1e-300)
    delta = -np.log1p(ratio) + np.abs(rg) ** 2 * gamma / (tg * (tg + gamma))
    per_event = np.sum(delta, axis=-3)  # accumulate over nodes
    with np.errstate(divide="ignore"):
        logw = np.log(prior.prior) + per_event * prior.hypothesis_mask()
    return logw


def block_posterior(r: np.ndarray, tau_r: np.ndarray, prior: GroupPrior) -> np.ndarray:
    """Posterior probability of each event value, (..., M, R+1), rows sum to 1."""
    logw = block_log_weights(r, tau_r, prior)
    return np.exp(logw - logsumexp(logw, axis=-1, keepdims=True))


def coefficient_moments(
    r: np.ndarray, tau_r: np.ndarray, posterior: np.ndarray, prior: GroupPrior
):
    """Posterior mean and variance of every coefficient.

    Given the hypothesis posterior, each modeled coefficient is a mixture
    of a point mass at zero and the Gaussian posterior under its own
    hypothesis, whose mean shrinks the pseudo-observation by
    gamma/(gamma + tau_r).
    """
    rg = _grouped(np.asarray(r), prior)
    tg = _grouped(np.asarray(tau_r, dtype=np.float64), prior)
    gamma = prior.group_var[:, None]
    pi = (posterior * prior.hypothesis_mask())[..., None, :, :]  # add node axis
    shrink = gamma / (gamma + tg)
    mean_on = shrink * rg
    var_on = shrink * tg
    x_hat = pi * mean_on
    second = pi * (np.abs(mean_on) ** 2 + var_on)
    tau_x = np.maximum(second - np.abs(x_hat) ** 2, 0.0)
    flat = r.shape[:-1] + (prior.num_events * (prior.num_values + 1),)
    return x_hat.reshape(flat), tau_x.reshape(flat)


def compute_llrs(posterior: np.ndarray, llr_clamp: float = LLR_CLAMP_DEFAULT) -> np.ndarray:
    """Per-event log ratios ln p(v)/p(0) for v = 1..R, clamped."""
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(posterior)
        llrs = logs[..., 1:] - logs[..., :1]
    llrs = np.nan_to_num(llrs, nan=0.0, posinf=llr_clamp, neginf=-llr_clamp)
    return np.clip(llrs, -llr_clamp, llr_clamp)


class EventGroupDenoiser:
    """Denoiser plug-in for the message-passing engine.

    Carries the group prior and hands back coefficient moments plus the
    event posterior and clamped LLRs from the same pass.
    """

    def __init__(self, prior: GroupPrior, llr_clamp: float = LLR_CLAMP_DEFAULT,
                 variance_floor: float = 1e-12):
        self.prior = prior
        self.llr_clamp = llr_clamp
        self.variance_floor = variance_floor

    def prior_variance(self) -> np.ndarray:
        """Marginal prior variance per coefficient (flattened blocks)."""
        p = self.prior
        var = (p.prior * p.hypothesis_mask()) * p.group_var[:, None]
        return np.maximum(var.reshape(-1), self.variance_floor)

    def __call__(self, r: np.ndarray, tau_r: np.ndarray):
        logw = block_log_weights(r, tau_r, self.prior)
        posterior = np.exp(logw - logsumexp(logw, axis=-1, keepdims=True))
        x_hat, tau_x = coefficient_moments(r, tau_r, posterior, self.prior)
        tau_x = np.maximum(tau_x, self.variance_floor)
        extras = {
            "log_weights": logw,
            "posterior": posterior,
            "llrs": np.clip(logw[..., 1:] - logw[..., :1],
                            -self.llr_clamp, self.llr_clamp),
        }
        return x_hat, tau_x, extras


class GaussianDenoiser:
    """Independent CN(0, var_j) prior; the linear-MMSE special case."""

    def __init__(self, variances: np.ndarray):
        self.variances = np.asarray(variances, dtype=np.float64)

    def prior_variance(self) -> np.ndarray:
        return self.variances

    def __call__(self, r: np.ndarray, tau_r: np.ndarray):
        g = self.variances
        shrink = g / (g + tau_r)
        return shrink * r, shrink * tau_r, {}
