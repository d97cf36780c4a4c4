"""Decoders and decision layer.

Quantize-and-forward decodes all nodes' blocks jointly; detect-and-
forward decodes each node alone, ships quantized LLRs and fuses them by
addition at the central processor.  Decisions compare each event's LLR
row against a scalar threshold: below threshold for every value means
inactive, otherwise the best value wins (ties to the smallest value).

All entry points accept a leading trial axis and are deterministic
given their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DeviceAssignment, SystemConfig
from .denoiser import EventGroupDenoiser, GroupPrior, LLR_CLAMP_DEFAULT
from .gamp import GampOptions, GampProblem, GampResult, run_gamp
from .scenario import Codebook


@dataclass(frozen=True)
class ThresholdPolicy:
    threshold: float = 0.0


@dataclass
class DetectionResult:
    llrs: np.ndarray        # (..., M, R)
    posterior: np.ndarray   # (..., M, R+1)
    diagnostics: GampResult


def _as_threshold(policy) -> float:
    if isinstance(policy, ThresholdPolicy):
        return policy.threshold
    return float(policy)


def qf_detect(
    samples: np.ndarray,
    codebook: Codebook,
    system: SystemConfig,
    assignment: DeviceAssignment,
    quant_var=0.0,
    options: GampOptions | None = None,
    llr_clamp: float = LLR_CLAMP_DEFAULT,
    trace: bool = False,
) -> DetectionResult:
    """Joint decoding of every node's (possibly quantized) block.

    ``quant_var`` is the fronthaul noise variance folded into the output
    channel, scalar or broadcastable per node, e.g. (..., nodes, 1).
    The effective noise floor never drops below the engine's variance
    floor so noiseless instances stay well-posed.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    opts = options or GampOptions()
    num_nodes = samples.shape[-2]
    prior = GroupPrior.from_configs(system, assignment, num_nodes=num_nodes)
    den = EventGroupDenoiser(prior, llr_clamp=llr_clamp,
                             variance_floor=opts.variance_floor)
    quant = np.asarray(quant_var, dtype=np.float64)
    if quant.ndim == 1:  # per-node vector
        quant = quant[..., None]
    noise_var = np.maximum(system.noise_var + quant, opts.variance_floor)
    problem = GampProblem(mixing=codebook.matrix, observed=samples,
                          noise_var=noise_var, denoiser=den)
    result = run_gamp(problem, opts, trace=trace)
    return DetectionResult(
        llrs=result.extras["llrs"],
        posterior=result.extras["posterior"],
        diagnostics=result,
    )


def dtf_local_detect(
    samples: np.ndarray,
    codebook: Codebook,
    system: SystemConfig,
    assignment: DeviceAssignment,
    options: GampOptions | None = None,
    llr_clamp: float = LLR_CLAMP_DEFAULT,
) -> DetectionResult:
    """Single-node decoding at an edge node.

    Identical to ``qf_detect`` with one node and no fronthaul noise:
    pass a (..., 1, n) block.  A (..., n) block is promoted to one node.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.ndim == 1 or samples.shape[-2] != 1:
        samples = samples[..., None, :]
    return qf_detect(samples, codebook, system, assignment,
                     quant_var=0.0, options=options, llr_clamp=llr_clamp)


def fuse_llrs(llr_stack) -> np.ndarray:
    """Additive fusion of per-node LLR matrices of identical shape."""
    stack = [np.asarray(l, dtype=np.float64) for l in llr_stack]
    if not stack:
        raise ValueError("fuse_llrs needs at least one matrix")
    shape = stack[0].shape
    for l in stack[1:]:
        if l.shape != shape:
            raise ValueError(f"shape mismatch in fusion: {l.shape} vs {shape}")
    return np.sum(stack, axis=0)


def decide(llrs: np.ndarray, policy=0.0) -> np.ndarray:
    """Event decisions from an LLR matrix.

    An event is inactive when every value's LLR is strictly below the
    threshold; an LLR exactly at threshold counts as an active
    candidate.  Among values the largest LLR wins, ties to the smallest
    value index.
    """
    th = _as_threshold(policy)
    llrs = np.asarray(llrs, dtype=np.float64)
    best = np.argmax(llrs, axis=-1) + 1
    active = np.max(llrs, axis=-1) >= th
    return np.where(active, best, 0).astype(np.int64)


def threshold_replay(llr_samples: np.ndarray, truths: np.ndarray,
                     thresholds: np.ndarray):
    """Error counts of every candidate threshold in one vectorized pass.

    Exploits that a decision only changes at the event's max LLR: above
    it the event decodes 0, below it the argmax value wins regardless of
    the threshold.  Returns (errors, false_pos, false_neg) counts per
    threshold plus the (inactive, active) slot totals.
    """
    llr_samples = np.asarray(llr_samples, dtype=np.float64)
    truths = np.asarray(truths)
    peak = np.max(llr_samples, axis=-1).reshape(-1)
    best = (np.argmax(llr_samples, axis=-1) + 1).reshape(-1)
    truth = truths.reshape(-1)
    thresholds = np.asarray(thresholds, dtype=np.float64)

    inactive = truth == 0
    active = ~inactive
    wrong_value = active & (best != truth)

    over = peak[None, :] >= thresholds[:, None]  # decided active
    false_pos = np.sum(over[:, inactive], axis=1)
    false_neg = np.sum(~over[:, active], axis=1)
    wrong = np.sum(over[:, wrong_value], axis=1)
    errors = false_pos + false_neg + wrong
    return errors, false_pos, false_neg, int(inactive.sum()), int(active.sum())


class EmptyCalibrationError(ValueError):
    """Threshold calibration got no samples."""


def optimize_threshold(
    llr_samples: np.ndarray, truths: np.ndarray, grid: np.ndarray
):
    """Pick the grid threshold minimizing empirical event error rate.

    Ties break toward the smallest threshold.  Returns the chosen
    threshold and the error-rate curve over the grid.
    """
    llr_samples = np.asarray(llr_samples, dtype=np.float64)
    truths = np.asarray(truths)
    if llr_samples.size == 0 or truths.size == 0:
        raise EmptyCalibrationError("no calibration samples")
    grid = np.asarray(grid, dtype=np.float64)
    errors, _, _, n_inactive, n_active = threshold_replay(
        llr_samples, truths, grid
    )
    total = n_inactive + n_active
    curve = errors / total
    return float(grid[int(np.argmin(errors))]), curve


def default_threshold_grid(start: float = -20.0, stop: float = 20.0,
                           step: float = 0.1) -> np.ndarray:
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)
