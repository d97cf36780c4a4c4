"""Error counting and interval estimates for Monte Carlo runs.

The accumulator keeps raw counts so shards merge exactly; rates and
Wilson 95% intervals are only formed at finalization.  Event errors
split into false positives (decided active, truly inactive), false
negatives (decided inactive, truly active) and wrong values (active
both ways but different), which always add up to the error count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Z_95 = 1.959963984540054


class EmptyAccumulatorError(ValueError):
    """finalize() called before any trial was accumulated."""


@dataclass
class MetricsAccumulator:
    trials: int = 0
    events: int = 0
    errors: int = 0
    false_pos: int = 0
    false_neg: int = 0
    wrong_value: int = 0
    inactive_slots: int = 0
    active_slots: int = 0

    def merge(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        for name in ("trials", "events", "errors", "false_pos", "false_neg",
                     "wrong_value", "inactive_slots", "active_slots"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self


def accumulate(truth: np.ndarray, decision: np.ndarray,
               acc: MetricsAccumulator | None = None) -> MetricsAccumulator:
    """Fold decisions for one or more trials into the accumulator.

    ``truth`` and ``decision`` share shape (..., num_events); leading
    axes count as trials.
    """
    truth = np.asarray(truth)
    decision = np.asarray(decision)
    if truth.shape != decision.shape:
        raise ValueError(f"shape mismatch {truth.shape} vs {decision.shape}")
    acc = acc or MetricsAccumulator()

    t_inactive = truth == 0
    d_inactive = decision == 0
    fp = t_inactive & ~d_inactive
    fn = ~t_inactive & d_inactive
    wv = ~t_inactive & ~d_inactive & (truth != decision)

    num_events = truth.shape[-1]
    acc.trials += int(truth.size // num_events)
    acc.events += int(truth.size)
    acc.errors += int(fp.sum() + fn.sum() + wv.sum())
    acc.false_pos += int(fp.sum())
    acc.false_neg += int(fn.sum())
    acc.wrong_value += int(wv.sum())
    acc.inactive_slots += int(t_inactive.sum())
    acc.active_slots += int((~t_inactive).sum())
    return acc


def wilson_interval(successes: int, total: int, z: float = Z_95):
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        return (float("nan"), float("nan"))
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2 * total)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / total + z2 / (4 * total * total))
    return (max(center - half, 0.0), min(center + half, 1.0))


def _rate_and_halfwidth(successes: int, total: int):
    if total <= 0:
        return float("nan"), float("nan"), (float("nan"), float("nan"))
    rate = successes / total
    lo, hi = wilson_interval(successes, total)
    # Symmetric cover of the (asymmetric) Wilson interval around the rate.
    half = max(rate - lo, hi - rate)
    return rate, half, (lo, hi)


@dataclass(frozen=True)
class MetricsReport:
    pe: float
    p_fp: float
    p_fn: float
    p_wv: float
    trials: int
    events: int
    pe_ci: float
    p_fp_ci: float
    p_fn_ci: float
    pe_interval: tuple = field(default=(float("nan"), float("nan")))
    p_fp_interval: tuple = field(default=(float("nan"), float("nan")))
    p_fn_interval: tuple = field(default=(float("nan"), float("nan")))


def finalize(acc: MetricsAccumulator) -> MetricsReport:
    if acc.trials == 0:
        raise EmptyAccumulatorError("no trials accumulated")
    decomposed = acc.false_pos + acc.false_neg + acc.wrong_value
    assert decomposed == acc.errors, (
        f"error decomposition broken: {decomposed} != {acc.errors}"
    )
    pe, pe_ci, pe_iv = _rate_and_halfwidth(acc.errors, acc.events)
    p_fp, fp_ci, fp_iv = _rate_and_halfwidth(acc.false_pos, acc.inactive_slots)
    p_fn, fn_ci, fn_iv = _rate_and_halfwidth(acc.false_neg, acc.active_slots)
    p_wv = acc.wrong_value / acc.active_slots if acc.active_slots else float("nan")
    return MetricsReport(
        pe=pe, p_fp=p_fp, p_fn=p_fn, p_wv=p_wv,
        trials=acc.trials, events=acc.events,
        pe_ci=pe_ci, p_fp_ci=fp_ci, p_fn_ci=fn_ci,
        pe_interval=pe_iv, p_fp_interval=fp_iv, p_fn_interval=fn_iv,
    )
