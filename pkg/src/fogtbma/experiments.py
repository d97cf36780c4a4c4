"""Monte Carlo experiment drivers behind the command line.

An experiment spec bundles the scenario configs with one sweep
description.  All three sweeps share the same per-point procedure:
draw calibration and evaluation trials from disjoint counter-based
streams, decode, calibrate the decision threshold on the calibration
half, then score the evaluation half.  Trial streams are keyed by trial
index alone, so operating points (SNR, budgets, schemes) see paired
realizations and sweep curves are smooth in the comparisons that matter.

Rows are plain dicts; ``csv_text`` renders them with a fixed column
order and fixed float formatting so identical seeds give identical
bytes.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .config import (ConfigError, DeviceAssignment, FronthaulConfig,
                     ObservationModel, SystemConfig, ValidationReport,
                     assignment_from_dict, fronthaul_from_dict,
                     observation_from_dict, system_from_dict, validate_configs)
from .detection import (decide, default_threshold_grid, optimize_threshold,
                        qf_detect, threshold_replay)
from .fronthaul import (BudgetTooSmallError, dtf_roundtrip_llrs,
                        nominal_received_power, qf_test_channel,
                        qf_uniform_quantize)
from .gamp import GampOptions, NonFiniteStateError
from .metrics import accumulate, finalize, wilson_interval
from .rng import (ROLE_CHANNEL, ROLE_CODEBOOK, ROLE_ESTIMATES, ROLE_EVENTS,
                  ROLE_NOISE, ROLE_QUANT, RandomSource, experiment_stream_id,
                  trial_generator)
from .scenario import (_standard_complex, build_sparse_signal,
                       generate_codebook, sample_channels, sample_estimates,
                       sample_events, transmit)

SCHEME_NAMES = ("qf_test_channel", "qf_uniform", "dtf", "qf_unquantized")

SNR_SWEEP_COLUMNS = ("scheme", "B", "N", "snr_db", "pe", "p_fp", "p_fn", "ci",
                     "trials", "seed", "threshold", "p_fp_ci", "p_fn_ci",
                     "p_wv", "status")
REQUIRED_SNR_COLUMNS = ("scheme", "B", "N", "required_snr_db", "target_pe",
                        "trials", "seed")
ROC_COLUMNS = ("scheme", "threshold", "p_fp", "p_fn", "B", "N", "snr_db",
               "p_fp_ci", "p_fn_ci", "trials", "seed")


class NumericalFailure(RuntimeError):
    """Unrecoverable numerical breakdown of a whole run."""


@dataclass(frozen=True)
class ThresholdGridSpec:
    start: float = -20.0
    stop: float = 20.0
    step: float = 0.1

    def values(self) -> np.ndarray:
        return default_threshold_grid(self.start, self.stop, self.step)


@dataclass(frozen=True)
class SnrSweep:
    snr_db: tuple
    schemes: tuple = ()
    bit_budgets: tuple = ()


@dataclass(frozen=True)
class BudgetGrid:
    bit_budgets: tuple
    codeword_lengths: tuple
    target_pe: float
    schemes: tuple = ()
    snr_lo: float = -10.0
    snr_hi: float = 30.0
    resolution_db: float = 0.25


@dataclass(frozen=True)
class RocSweep:
    bit_budgets: tuple = ()
    schemes: tuple = ()


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig = field(default_factory=SystemConfig)
    assignment: DeviceAssignment | None = None
    observation: ObservationModel = field(default_factory=ObservationModel)
    fronthaul: FronthaulConfig = field(default_factory=FronthaulConfig)
    gamp: GampOptions = field(default_factory=GampOptions)
    sweep: object = None
    trials: int = 1000
    calibration_trials: int = 500
    threshold_grid: ThresholdGridSpec = field(default_factory=ThresholdGridSpec)
    master_seed: int = 0

    def resolved_assignment(self) -> DeviceAssignment:
        if self.assignment is not None:
            return self.assignment
        return DeviceAssignment.round_robin(self.system.num_devices,
                                            self.system.num_events)

    def validate(self) -> ValidationReport:
        report = validate_configs(self.system, self.resolved_assignment(),
                                  self.fronthaul, self.observation)
        extra = list(report.violations)
        if self.trials < 1:
            extra.append("trials must be >= 1")
        if self.calibration_trials < 1:
            extra.append("calibration_trials must be >= 1")
        if self.threshold_grid.step <= 0:
            extra.append("threshold_grid.step must be > 0")
        if self.sweep is None:
            extra.append("spec has no sweep")
        for name in self._sweep_schemes():
            if name not in SCHEME_NAMES:
                extra.append(f"unknown scheme {name!r}")
        return ValidationReport(tuple(extra))

    def _sweep_schemes(self) -> tuple:
        if self.sweep is None:
            return ()
        schemes = getattr(self.sweep, "schemes", ())
        return schemes or (self.fronthaul.scheme,)

    def _sweep_budgets(self) -> tuple:
        budgets = getattr(self.sweep, "bit_budgets", ())
        return budgets or (self.fronthaul.bit_budget,)


def _float_or_inf(v):
    if v in ("inf", "Infinity"):
        return math.inf
    return float(v)


def _strict(cls, data: dict, where: str, converters=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for key, value in data.items():
        conv = (converters or {}).get(key)
        kwargs[key] = conv(value) if conv else value
    return cls(**kwargs)


def _load_sweep(data: dict) -> object:
    if not isinstance(data, dict) or len(data) != 1:
        raise ConfigError(
            "sweep: expected exactly one of 'snr_sweep', 'budget_grid', 'roc'"
        )
    kind, body = next(iter(data.items()))
    as_tuple = lambda v: tuple(v)
    budgets = lambda v: tuple(_float_or_inf(b) for b in v)
    if kind == "snr_sweep":
        return _strict(SnrSweep, body, "sweep.snr_sweep",
                       {"snr_db": as_tuple, "schemes": as_tuple,
                        "bit_budgets": budgets})
    if kind == "budget_grid":
        return _strict(BudgetGrid, body, "sweep.budget_grid",
                       {"bit_budgets": budgets,
                        "codeword_lengths": as_tuple, "schemes": as_tuple})
    if kind == "roc":
        return _strict(RocSweep, body, "sweep.roc",
                       {"bit_budgets": budgets, "schemes": as_tuple})
    raise ConfigError(f"sweep: unknown kind {kind!r}")


def load_spec(data: dict) -> ExperimentSpec:
    """Build an experiment spec from parsed JSON, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("experiment spec must be a JSON object")
    known = {"system", "assignment", "observation", "fronthaul", "gamp",
             "sweep", "trials", "calibration_trials", "threshold_grid",
             "master_seed"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"experiment spec: unknown keys {unknown}")
    try:
        kwargs = {}
        if "system" in data:
            kwargs["system"] = system_from_dict(data["system"])
        if "assignment" in data:
            kwargs["assignment"] = assignment_from_dict(data["assignment"])
        if "observation" in data:
            kwargs["observation"] = observation_from_dict(data["observation"])
        if "fronthaul" in data:
            kwargs["fronthaul"] = fronthaul_from_dict(data["fronthaul"])
        if "gamp" in data:
            kwargs["gamp"] = _strict(
                GampOptions, data["gamp"], "gamp",
                {"max_iters": int, "tol": float, "damping": float,
                 "variance_floor": float})
        if "sweep" in data:
            kwargs["sweep"] = _load_sweep(data["sweep"])
        if "threshold_grid" in data:
            kwargs["threshold_grid"] = _strict(
                ThresholdGridSpec, data["threshold_grid"], "threshold_grid",
                {"start": float, "stop": float, "step": float})
        for key in ("trials", "calibration_trials", "master_seed"):
            if key in data:
                kwargs[key] = int(data[key])
        return ExperimentSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Per-point simulation


@dataclass
class _ChannelPoint:
    """Everything scheme-independent about one (N, snr) operating point."""

    system: SystemConfig
    assignment: DeviceAssignment
    codebook: object
    events: np.ndarray        # (Tc+Te, M)
    received: np.ndarray      # (Tc+Te, L, N)
    quant_noise: np.ndarray   # (Tc+Te, L, N) unit-variance draws
    n_cal: int

    def split(self, arr):
        return arr[: self.n_cal], arr[self.n_cal:]


def _codebook_for(spec: ExperimentSpec, system: SystemConfig):
    sid = experiment_stream_id(ROLE_CODEBOOK, tag=system.codeword_length)
    rng = RandomSource(spec.master_seed, sid).generator()
    return generate_codebook(system, rng)


def _draw_phase(spec: ExperimentSpec, system: SystemConfig,
                assignment: DeviceAssignment, count: int, calibration: bool):
    seed = spec.master_seed
    m = system.num_events
    l, n = system.num_edge_nodes, system.codeword_length
    k = system.num_devices
    events = np.empty((count, m), dtype=np.int64)
    channels = np.empty((count, l, k), dtype=np.complex128)
    noise = np.empty((count, l, n), dtype=np.complex128)
    quant = np.empty((count, l, n), dtype=np.complex128)
    for i in range(count):
        events[i] = sample_events(
            system, trial_generator(seed, i, ROLE_EVENTS, calibration))
        channels[i] = sample_channels(
            system, trial_generator(seed, i, ROLE_CHANNEL, calibration))
        noise[i] = _standard_complex(
            trial_generator(seed, i, ROLE_NOISE, calibration), (l, n))
        quant[i] = _standard_complex(
            trial_generator(seed, i, ROLE_QUANT, calibration), (l, n))
    obs = spec.observation
    if obs.flip_prob == 0.0:
        estimates = sample_estimates(events, assignment, obs, system)
    else:
        estimates = np.empty((count, k, m), dtype=np.int64)
        for i in range(count):
            estimates[i] = sample_estimates(
                events[i], assignment, obs, system,
                trial_generator(seed, i, ROLE_ESTIMATES, calibration))
    return events, estimates, channels, noise, quant


def _channel_point(spec: ExperimentSpec, system: SystemConfig) -> _ChannelPoint:
    assignment = spec.resolved_assignment()
    codebook = _codebook_for(spec, system)
    parts = []
    for count, calibration in ((spec.calibration_trials, True),
                               (spec.trials, False)):
        events, estimates, channels, noise, quant = _draw_phase(
            spec, system, assignment, count, calibration)
        signals = build_sparse_signal(estimates, assignment, channels, system)
        received = transmit(signals, codebook, system, noise=noise)
        parts.append((events, received.samples, quant))
    return _ChannelPoint(
        system=system, assignment=assignment, codebook=codebook,
        events=np.concatenate([parts[0][0], parts[1][0]]),
        received=np.concatenate([parts[0][1], parts[1][1]]),
        quant_noise=np.concatenate([parts[0][2], parts[1][2]]),
        n_cal=spec.calibration_trials,
    )


def _scheme_llrs(point: _ChannelPoint, spec: ExperimentSpec, scheme: str,
                 budget: float, cache: dict) -> np.ndarray:
    """All trials' fused LLR matrices for one (scheme, budget)."""
    system, assignment = point.system, point.assignment
    fronthaul = spec.fronthaul
    opts = spec.gamp

    def detect(samples, quant_var):
        try:
            return qf_detect(samples, point.codebook, system, assignment,
                             quant_var=quant_var, options=opts).llrs
        except NonFiniteStateError:
            softer = replace(opts, damping=opts.damping * 0.5)
            return qf_detect(samples, point.codebook, system, assignment,
                             quant_var=quant_var, options=softer).llrs

    if scheme == "qf_unquantized":
        if "unq" not in cache:
            cache["unq"] = detect(point.received, 0.0)
        return cache["unq"]

    if scheme == "qf_test_channel":
        power = None
        if fronthaul.power_estimate_mode == "nominal":
            power = nominal_received_power(system, assignment)
        block = qf_test_channel(point.received, budget,
                                system.codeword_length, power=power,
                                noise=point.quant_noise)
        qv = np.asarray(block.quant_var, dtype=np.float64)
        if qv.ndim >= 2:  # (trials, nodes) -> broadcast over samples
            qv = qv[..., None]
        return detect(block.samples, qv)

    if scheme == "qf_uniform":
        clip = fronthaul.sample_clip_sigmas * np.sqrt(
            np.mean(np.abs(point.received) ** 2, axis=(-2, -1),
                    keepdims=True) / 2.0
        )
        block = qf_uniform_quantize(point.received, budget,
                                    system.codeword_length, clip)
        return detect(block.samples, block.quant_var[..., None])

    if scheme == "dtf":
        if "dtf_local" not in cache:
            trials, num_nodes, n = point.received.shape
            folded = point.received.reshape(trials * num_nodes, 1, n)
            llrs = detect(folded, 0.0)
            cache["dtf_local"] = llrs.reshape(
                trials, num_nodes, system.num_events, system.num_values)
        local = cache["dtf_local"]
        flags = decide(local, 0.0) != 0
        recon, _ = dtf_roundtrip_llrs(local, flags, budget,
                                      fronthaul.llr_clip,
                                      fronthaul.dtf_allocation)
        return recon.sum(axis=1)

    raise ConfigError(f"unknown scheme {scheme!r}")


def _evaluate_point(spec: ExperimentSpec, scheme: str, budget: float,
                    system: SystemConfig, cache: dict | None = None):
    """Calibrate and score one operating point.

    Returns (report, threshold, status); report is None when the point
    cannot run (budget too small or persistent divergence).
    """
    point = cache.get("point") if cache is not None else None
    if point is None:
        point = _channel_point(spec, system)
        if cache is not None:
            cache["point"] = point
    llr_cache = cache.setdefault("llrs", {}) if cache is not None else {}
    try:
        llrs = _scheme_llrs(point, spec, scheme, budget, llr_cache)
    except BudgetTooSmallError:
        return None, float("nan"), "budget_too_small"
    except NonFiniteStateError:
        return None, float("nan"), "diverged"
    cal_llrs, eval_llrs = point.split(llrs)
    cal_events, eval_events = point.split(point.events)
    threshold, _ = optimize_threshold(cal_llrs, cal_events,
                                      spec.threshold_grid.values())
    decisions = decide(eval_llrs, threshold)
    report = finalize(accumulate(eval_events, decisions))
    return report, threshold, "ok"


# ---------------------------------------------------------------------------
# Sweeps


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _budgets_for(scheme: str, budgets) -> tuple:
    return (math.inf,) if scheme == "qf_unquantized" else tuple(budgets)


def run_snr_sweep(spec: ExperimentSpec):
    """Error rates versus SNR for each (scheme, budget) pair."""
    sweep = spec.sweep
    if not isinstance(sweep, SnrSweep):
        raise ConfigError("spec.sweep is not an snr_sweep")
    schemes = spec._sweep_schemes()
    budgets = spec._sweep_budgets()

    results = {}
    for snr in sweep.snr_db:
        system = replace(spec.system, snr_db=float(snr))
        cache: dict = {}
        for scheme in schemes:
            for budget in _budgets_for(scheme, budgets):
                report, threshold, status = _evaluate_point(
                    spec, scheme, budget, system, cache)
                results[(scheme, budget, snr)] = (report, threshold, status)
        _progress(f"snr-sweep: snr={snr} dB done")

    rows = []
    for scheme in schemes:
        for budget in _budgets_for(scheme, budgets):
            for snr in sweep.snr_db:
                report, threshold, status = results[(scheme, budget, snr)]
                rows.append(_metrics_row(spec, scheme, budget, snr, report,
                                         threshold, status))
    return SNR_SWEEP_COLUMNS, rows


def _metrics_row(spec, scheme, budget, snr, report, threshold, status):
    nan = float("nan")
    row = {
        "scheme": scheme, "B": budget,
        "N": spec.system.codeword_length, "snr_db": float(snr),
        "pe": nan, "p_fp": nan, "p_fn": nan, "ci": nan,
        "trials": spec.trials, "seed": spec.master_seed,
        "threshold": threshold, "p_fp_ci": nan, "p_fn_ci": nan,
        "p_wv": nan, "status": status,
    }
    if report is not None:
        row.update(pe=report.pe, p_fp=report.p_fp, p_fn=report.p_fn,
                   ci=report.pe_ci, p_fp_ci=report.p_fp_ci,
                   p_fn_ci=report.p_fn_ci, p_wv=report.p_wv)
    return row


def _required_snr_search(spec: ExperimentSpec, scheme: str, budget: float,
                         n: int, sweep: BudgetGrid):
    """Bisect the smallest SNR meeting the target error rate.

    A point passes when its error rate is at or below target, using the
    Wilson interval when it separates cleanly from the target and the
    point estimate otherwise.  Returns the feasible end of the bracket
    or None when even the top of the range fails.
    """
    base = replace(spec.system, codeword_length=int(n))

    def passes(snr):
        system = replace(base, snr_db=float(snr))
        report, _, status = _evaluate_point(spec, scheme, budget, system, {})
        if status != "ok":
            return None
        lo, hi = report.pe_interval
        if hi <= sweep.target_pe:
            return True
        if lo > sweep.target_pe:
            return False
        return report.pe <= sweep.target_pe

    lo, hi = sweep.snr_lo, sweep.snr_hi
    top = passes(hi)
    if top is None or top is False:
        return None
    if passes(lo):
        return float(lo)
    while hi - lo > sweep.resolution_db:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def run_required_snr(spec: ExperimentSpec):
    """Smallest SNR meeting the target error rate per (scheme, B, N)."""
    sweep = spec.sweep
    if not isinstance(sweep, BudgetGrid):
        raise ConfigError("spec.sweep is not a budget_grid")
    schemes = spec._sweep_schemes()

    rows = []
    for scheme in schemes:
        for budget in _budgets_for(scheme, sweep.bit_budgets):
            for n in sweep.codeword_lengths:
                try:
                    snr = _required_snr_search(spec, scheme, budget, int(n),
                                               sweep)
                except BudgetTooSmallError:
                    snr = None
                rows.append({
                    "scheme": scheme, "B": budget, "N": int(n),
                    "required_snr_db": "unreachable" if snr is None else snr,
                    "target_pe": sweep.target_pe,
                    "trials": spec.trials, "seed": spec.master_seed,
                })
                _progress(f"required-snr: {scheme} B={budget} N={n} -> "
                          f"{rows[-1]['required_snr_db']}")
    return REQUIRED_SNR_COLUMNS, rows


def run_roc(spec: ExperimentSpec):
    """False-positive / false-negative trade-off over the threshold grid.

    Runs at the base system's SNR and codeword length; no calibration
    phase, every grid threshold is replayed against the evaluation set.
    """
    sweep = spec.sweep
    if not isinstance(sweep, RocSweep):
        raise ConfigError("spec.sweep is not a roc sweep")
    schemes = spec._sweep_schemes()
    budgets = spec._sweep_budgets()
    grid = spec.threshold_grid.values()

    cache: dict = {}
    rows = []
    for scheme in schemes:
        for budget in _budgets_for(scheme, budgets):
            report_rows = []
            point = cache.get("point")
            if point is None:
                point = _channel_point(spec, spec.system)
                cache["point"] = point
            try:
                llrs = _scheme_llrs(point, spec, scheme, budget,
                                    cache.setdefault("llrs", {}))
            except (BudgetTooSmallError, NonFiniteStateError) as exc:
                _progress(f"roc: skipping {scheme} B={budget}: {exc}")
                continue
            _, eval_llrs = point.split(llrs)
            _, eval_events = point.split(point.events)
            _, fp, fn, n_inactive, n_active = threshold_replay(
                eval_llrs, eval_events, grid)
            for g, threshold in enumerate(grid):
                fp_lo, fp_hi = wilson_interval(int(fp[g]), n_inactive)
                fn_lo, fn_hi = wilson_interval(int(fn[g]), n_active)
                p_fp = fp[g] / n_inactive if n_inactive else float("nan")
                p_fn = fn[g] / n_active if n_active else float("nan")
                report_rows.append({
                    "scheme": scheme, "threshold": float(threshold),
                    "p_fp": p_fp, "p_fn": p_fn, "B": budget,
                    "N": spec.system.codeword_length,
                    "snr_db": spec.system.snr_db,
                    "p_fp_ci": max(p_fp - fp_lo, fp_hi - p_fp),
                    "p_fn_ci": max(p_fn - fn_lo, fn_hi - p_fn),
                    "trials": spec.trials, "seed": spec.master_seed,
                })
            rows.extend(report_rows)
            _progress(f"roc: {scheme} B={budget} done")
    return ROC_COLUMNS, rows


# ---------------------------------------------------------------------------
# Debug capture


def debug_capture(spec: ExperimentSpec, system: SystemConfig | None = None,
                  max_trials: int = 16):
    """Small inspection run for offline debugging.

    Draws the first evaluation trials, decodes them jointly without
    fronthaul loss, and returns (records, trace_rows): one dict per
    trial with the drawn event values, every device's local estimates
    (-1 for unmonitored slots) and the per-node received block as
    [re, im] pairs, plus the decoder's per-iteration trace.
    """
    system = system or spec.system
    assignment = spec.resolved_assignment()
    codebook = _codebook_for(spec, system)
    count = min(max_trials, spec.trials)
    events, estimates, channels, noise, _ = _draw_phase(
        spec, system, assignment, count, calibration=False)
    signals = build_sparse_signal(estimates, assignment, channels, system)
    received = transmit(signals, codebook, system, noise=noise)
    result = qf_detect(received.samples, codebook, system, assignment,
                       options=spec.gamp, trace=True)
    records = []
    for i in range(count):
        y = received.samples[i]
        records.append({
            "trial": i,
            "xi": events[i].tolist(),
            "phi": estimates[i].tolist(),
            "y": [[[float(v.real), float(v.imag)] for v in row] for row in y],
        })
    return records, result.diagnostics.trace


# ---------------------------------------------------------------------------
# CSV rendering


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return format(f, ".10g")


def csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row[c]) for c in columns))
    return "\n".join(lines) + "\n"
