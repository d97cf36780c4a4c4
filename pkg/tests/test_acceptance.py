"""End-to-end acceptance suite.

Each test checks one release criterion at its stated tolerance and
wall-clock budget and reports a single PASS/FAIL line.  The heavy
behavioral checks (error-rate curves, required-SNR surfaces, detection
trade-offs) run the full-scale reference scenario: 80 devices, 8 events
with 4 values each, 4 edge nodes, activation 0.1, with 2000 evaluation
trials per operating point under a fixed master seed.
"""

import json
import math
import time

import numpy as np
import pytest

import conftest
from _oracles import (enumerate_event_posteriors, lmmse_solve,
                      mc_event_posteriors)
from fogtbma.cli import EXIT_OK, main
from fogtbma.config import DeviceAssignment, ObservationModel, SystemConfig
from fogtbma.denoiser import GaussianDenoiser
from fogtbma.detection import qf_detect
from fogtbma.experiments import load_spec, run_required_snr, run_roc, \
    run_snr_sweep
from fogtbma.fronthaul import dtf_quantize, qf_test_channel, \
    serialize_payload, quantization_noise_var
from fogtbma.gamp import GampOptions, GampProblem, run_gamp
from fogtbma.metrics import wilson_interval
from fogtbma.scenario import (build_sparse_signal, generate_codebook,
                              sample_channels, sample_estimates, sample_events,
                              transmit)


def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    line = f"[criterion {num}] {verdict} {name}"
    if detail:
        line += f" ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _reference_config(**over):
    cfg = {
        "system": {"num_events": 8, "num_values": 4, "num_devices": 80,
                   "num_edge_nodes": 4, "codeword_length": 16,
                   "activation_prob": 0.1, "channel_var": 1.0,
                   "snr_db": 5.0},
        "fronthaul": {"bit_budget": 32, "scheme": "qf_test_channel"},
        "trials": 2000,
        "calibration_trials": 1000,
        "threshold_grid": {"start": -20.0, "stop": 20.0, "step": 0.1},
        "master_seed": 1,
    }
    cfg.update(over)
    return cfg


def _wilson_from_rate(rate: float, slots: int):
    return wilson_interval(int(round(rate * slots)), slots)


# ---------------------------------------------------------------------------
# 1. Decoder posteriors against exhaustive enumeration


def test_criterion_1_posterior_matches_enumeration_oracle():
    start = time.time()
    base = dict(num_events=2, num_values=2, num_devices=4,
                codeword_length=8, activation_prob=0.3, channel_var=1.0,
                snr_db=10.0)
    rng = np.random.default_rng(101)
    opts = GampOptions()
    tvs = []
    cross_checks = 0
    for num_nodes in (1, 2):
        cfg = SystemConfig(num_edge_nodes=num_nodes, **base)
        asn = DeviceAssignment.round_robin(cfg.num_devices, cfg.num_events)
        codebook = generate_codebook(cfg, rng)
        trials = 100
        events = sample_events(cfg, rng, trials)
        est = sample_estimates(events, asn, ObservationModel(), cfg)
        channels = sample_channels(cfg, rng, trials)
        signals = build_sparse_signal(est, asn, channels, cfg)
        received = transmit(signals, codebook, cfg, rng=rng)
        result = qf_detect(received.samples, codebook, cfg, asn, options=opts)
        for t in range(trials):
            exact = enumerate_event_posteriors(
                received.samples[t], codebook.matrix, cfg, asn)
            if t < 3:
                # The closed-form channel marginal must agree with plain
                # Monte Carlo integration over fading draws.
                mc = mc_event_posteriors(received.samples[t], codebook.matrix,
                                         cfg, asn, rng, draws=20000)
                assert np.max(np.abs(exact - mc)) < 0.03
                cross_checks += 1
            tv = 0.5 * np.abs(result.posterior[t] - exact).sum(axis=-1)
            tvs.extend(tv.tolist())
    mean_tv = float(np.mean(tvs))
    elapsed = time.time() - start
    _report(1, "decoder posterior total variation vs enumeration",
            mean_tv <= 0.05 and elapsed < 120.0 and cross_checks == 6,
            f"mean TV {mean_tv:.4f} <= 0.05 over {len(tvs)} event slots, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. Gaussian-prior decoding collapses to linear MMSE


def test_criterion_2_gaussian_prior_matches_lmmse():
    start = time.time()
    rng = np.random.default_rng(202)
    opts = GampOptions(max_iters=400, tol=1e-12, damping=1.0)
    worst = 0.0
    for _ in range(50):
        rows, cols = 8, 12
        mixing = (rng.standard_normal((rows, cols))
                  + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2 * rows)
        prior_var = rng.uniform(0.5, 2.0, cols)
        noise_var = float(rng.uniform(0.2, 2.0))
        x = np.sqrt(prior_var / 2) * (rng.standard_normal(cols)
                                      + 1j * rng.standard_normal(cols))
        noise = np.sqrt(noise_var / 2) * (rng.standard_normal(rows)
                                          + 1j * rng.standard_normal(rows))
        observed = mixing @ x + noise
        problem = GampProblem(mixing=mixing, observed=observed[None, :],
                              noise_var=noise_var,
                              denoiser=GaussianDenoiser(prior_var))
        result = run_gamp(problem, opts)
        direct = lmmse_solve(mixing, observed, prior_var, noise_var)
        worst = max(worst, float(np.max(np.abs(result.x_hat[0] - direct))))
    elapsed = time.time() - start
    _report(2, "Gaussian-prior decoding equals closed-form linear MMSE",
            worst < 1e-6 and elapsed < 10.0,
            f"max abs deviation {worst:.2e} < 1e-6 on 50 instances, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. Sparse-signal construction equals one-hot encoding algebra


def _one_hot_oracle(est, monitored_mask, cfg):
    """Stacked one-hot encodings built independently of the simulator."""
    trials, devices, events = est.shape
    width = cfg.num_values + 1
    sel = np.clip(est, 0, None)
    hot = np.zeros((trials, devices, events, width))
    np.put_along_axis(hot, sel[..., None], 1.0, axis=-1)
    keep = monitored_mask[None, :, :]
    if cfg.transmit_on_active:
        keep = keep & (sel > 0)
    hot *= keep[..., None]
    return hot.reshape(trials, devices, events * width)


def test_criterion_3_structural_identity():
    start = time.time()
    cfg = SystemConfig(num_events=8, num_values=4, num_devices=80,
                       num_edge_nodes=4, codeword_length=16,
                       activation_prob=0.1, channel_var=1.0, snr_db=5.0)
    asn = DeviceAssignment.round_robin(80, 8)
    monitored_mask = np.zeros((80, 8), dtype=bool)
    for k, row in enumerate(asn.monitored):
        monitored_mask[k, list(row)] = True
    rng = np.random.default_rng(303)
    worst = 0.0
    total = 0
    for _ in range(5):
        trials = 2000
        events = sample_events(cfg, rng, trials)
        est = sample_estimates(events, asn, ObservationModel(), cfg)
        channels = sample_channels(cfg, rng, trials)
        signals = build_sparse_signal(est, asn, channels, cfg)
        hot = _one_hot_oracle(est, monitored_mask, cfg)
        direct = np.einsum("tlk,tkj->tlj", channels, hot)
        worst = max(worst, float(np.max(np.abs(signals - direct))))
        total += trials
    elapsed = time.time() - start
    _report(3, "superposed signal equals one-hot encoding times channels",
            worst <= 1e-12 and elapsed < 10.0 and total == 10_000,
            f"max abs deviation {worst:.2e} <= 1e-12 on {total} trials, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4. Fronthaul test channel hits its nominal distortion


def test_criterion_4_test_channel_variance():
    start = time.time()
    rng = np.random.default_rng(404)
    worst = 0.0
    for bits, n, power in ((32.0, 16, 2.0), (96.0, 16, 1.0), (320.0, 32, 4.0)):
        trials = math.ceil(100_000 / n)
        y = np.sqrt(power / 2) * (rng.standard_normal((trials, n))
                                  + 1j * rng.standard_normal((trials, n)))
        block = qf_test_channel(y, bits, n, power=power, rng=rng)
        measured = float(np.mean(np.abs(block.samples - y) ** 2))
        nominal = quantization_noise_var(bits, n, power)
        worst = max(worst, abs(measured / nominal - 1.0))
    elapsed = time.time() - start
    _report(4, "test-channel distortion matches nominal variance",
            worst < 0.03 and elapsed < 10.0,
            f"worst relative deviation {worst:.2%} < 3% across three "
            f"settings, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 5. Error-rate curves: lossless reference falls with SNR and
#    detect-and-forward overtakes quantize-and-forward at 32 bits


def test_criterion_5_snr_sweep_behavior():
    start = time.time()
    spec = load_spec(_reference_config(sweep={"snr_sweep": {
        "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
        "schemes": ["qf_unquantized", "qf_test_channel", "dtf"],
        "bit_budgets": [32]}}))
    _, rows = run_snr_sweep(spec)
    slots = spec.trials * spec.system.num_events

    def curve(scheme):
        pts = sorted((r for r in rows if r["scheme"] == scheme),
                     key=lambda r: r["snr_db"])
        assert all(r["status"] == "ok" for r in pts)
        return pts

    unq = curve("qf_unquantized")
    ordered = True
    for a, b in zip(unq, unq[1:]):
        if b["pe"] > a["pe"]:
            lo_b, _ = _wilson_from_rate(b["pe"], slots)
            _, hi_a = _wilson_from_rate(a["pe"], slots)
            if lo_b > hi_a:
                ordered = False

    qf = curve("qf_test_channel")
    dtf = curve("dtf")
    separated = []
    for rq, rd in zip(qf, dtf):
        lo_q, _ = _wilson_from_rate(rq["pe"], slots)
        _, hi_d = _wilson_from_rate(rd["pe"], slots)
        separated.append(hi_d < lo_q)
    crossover = None
    for i in range(len(qf)):
        if all(separated[i:]):
            crossover = qf[i]["snr_db"]
            break
    cross_ok = crossover is not None and -5.0 <= crossover <= 15.0
    elapsed = time.time() - start
    _report(5, "SNR sweep: lossless curve monotone, detect-and-forward "
               "wins past a crossover",
            ordered and cross_ok and elapsed < 1800.0,
            f"crossover at {crossover} dB with non-overlapping intervals, "
            f"{elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 6. Required SNR: nonincreasing in the bit budget, increasing in the
#    codeword length when bits are scarce


def _required_values(rows):
    out = []
    for r in rows:
        v = r["required_snr_db"]
        out.append(math.inf if v == "unreachable" else float(v))
    return out


def test_criterion_6_required_snr_surface():
    start = time.time()
    budget_spec = load_spec(_reference_config(sweep={"budget_grid": {
        "bit_budgets": [32, 64, 128, 256], "codeword_lengths": [16],
        "target_pe": 0.01}}))
    _, budget_rows = run_required_snr(budget_spec)
    by_budget = _required_values(budget_rows)
    budget_ok = (all(math.isfinite(v) for v in by_budget)
                 and all(b <= a + 1e-9 for a, b in zip(by_budget,
                                                       by_budget[1:])))

    length_spec = load_spec(_reference_config(sweep={"budget_grid": {
        "bit_budgets": [24], "codeword_lengths": [8, 16, 32],
        "target_pe": 0.01}}))
    _, length_rows = run_required_snr(length_spec)
    by_length = _required_values(length_rows)
    length_ok = (math.isfinite(by_length[0])
                 and all(b >= a - 1e-9 for a, b in zip(by_length,
                                                       by_length[1:]))
                 and by_length[-1] > by_length[0])
    elapsed = time.time() - start
    _report(6, "required SNR falls with bit budget, rises with codeword "
               "length at 24 bits",
            budget_ok and length_ok and elapsed < 3600.0,
            f"budgets {by_budget} dB, lengths {by_length} dB, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 7. Detection trade-off curves at 0 dB with 32-length codewords


def test_criterion_7_roc_tradeoff():
    start = time.time()
    spec = load_spec(_reference_config(
        system={"num_events": 8, "num_values": 4, "num_devices": 80,
                "num_edge_nodes": 4, "codeword_length": 32,
                "activation_prob": 0.1, "channel_var": 1.0, "snr_db": 0.0},
        threshold_grid={"start": -60.0, "stop": 60.0, "step": 0.5},
        sweep={"roc": {"bit_budgets": [32, 320]}}))
    _, rows = run_roc(spec)

    curves = {}
    for budget in (32.0, 320.0):
        pts = [r for r in rows if r["B"] == budget]
        fps = [r["p_fp"] for r in pts]
        fns = [r["p_fn"] for r in pts]
        monotone = (all(b <= a + 1e-12 for a, b in zip(fps, fps[1:]))
                    and all(b >= a - 1e-12 for a, b in zip(fns, fns[1:])))
        endpoints = (fps[0] >= 0.999 and fps[-1] <= 0.001
                     and fns[-1] >= 0.999)
        op = next(r for r in pts if r["p_fp"] <= 0.1)
        curves[budget] = (monotone, endpoints, op)

    mono_ok = all(c[0] for c in curves.values())
    ends_ok = all(c[1] for c in curves.values())
    op_small, op_large = curves[32.0][2], curves[320.0][2]
    # Symmetric halfwidths bound the Wilson interval, so this check is
    # conservative.
    dominance = (op_large["p_fn"] + op_large["p_fn_ci"]
                 < op_small["p_fn"] - op_small["p_fn_ci"])
    elapsed = time.time() - start
    _report(7, "detection trade-off: monotone curves, saturated endpoints, "
               "large budget dominates at matched false-positive rate",
            mono_ok and ends_ok and dominance and elapsed < 1800.0,
            f"p_fn {op_large['p_fn']:.4f} vs {op_small['p_fn']:.4f} at "
            f"p_fp <= 0.1, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 8. Command line determinism


def test_criterion_8_cli_determinism(tmp_path):
    start = time.time()
    cfg = {
        "system": {"num_events": 4, "num_values": 2, "num_devices": 12,
                   "num_edge_nodes": 2, "codeword_length": 8,
                   "activation_prob": 0.2, "channel_var": 1.0,
                   "snr_db": 4.0},
        "fronthaul": {"bit_budget": 48, "scheme": "qf_test_channel"},
        "trials": 200, "calibration_trials": 100,
        "threshold_grid": {"start": -10.0, "stop": 10.0, "step": 0.5},
        "master_seed": 7,
        "sweep": {"snr_sweep": {"snr_db": [0.0, 4.0],
                                "schemes": ["qf_test_channel", "dtf"]}},
    }
    cfg_path = tmp_path / "spec.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    rc_a = main(["snr-sweep", "--config", str(cfg_path), "--out", str(out_a)])
    rc_b = main(["snr-sweep", "--config", str(cfg_path), "--out", str(out_b)])
    identical = out_a.read_bytes() == out_b.read_bytes()
    elapsed = time.time() - start
    _report(8, "repeated CLI runs produce byte-identical CSV",
            rc_a == EXIT_OK and rc_b == EXIT_OK and identical
            and elapsed < 60.0,
            f"{len(out_a.read_bytes())} bytes, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 9. Detect-and-forward payloads respect the bit budget


def test_criterion_9_dtf_payload_budget():
    start = time.time()
    rng = np.random.default_rng(909)
    m_events, r_values = 8, 4
    violations = 0
    for budget, allocation in ((32.0, "pooled"), (41.0, "per_event")):
        cap = math.ceil(budget / 8)
        for _ in range(5000):
            llrs = rng.uniform(-25.0, 25.0, (m_events, r_values))
            decisions = rng.integers(0, r_values + 1, m_events)
            payload = dtf_quantize(llrs, decisions, budget, clip=20.0,
                                   allocation=allocation)
            data = serialize_payload(payload)
            if len(data) > cap or len(data) != (payload.bits_used + 7) // 8:
                violations += 1
    elapsed = time.time() - start
    _report(9, "serialized payload never exceeds the byte budget",
            violations == 0 and elapsed < 10.0,
            f"0 violations over 10000 trials, {elapsed:.1f}s")
