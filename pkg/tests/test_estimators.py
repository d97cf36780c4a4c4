"""Estimator front ends: sklearn contract plus pipeline equivalence."""

import numpy as np
import pytest
from sklearn.base import clone

from fogtbma.config import (DeviceAssignment, FronthaulConfig,
                            ObservationModel, SystemConfig)
from fogtbma.detection import decide, dtf_local_detect, qf_detect
from fogtbma.estimators import DtfDetector, QfDetector
from fogtbma.fronthaul import dtf_roundtrip_llrs
from fogtbma.scenario import (build_sparse_signal, generate_codebook,
                              sample_channels, sample_estimates, sample_events,
                              transmit)


@pytest.fixture(scope="module")
def setup():
    cfg = SystemConfig(num_events=3, num_values=2, num_devices=9,
                       num_edge_nodes=2, codeword_length=12,
                       activation_prob=0.4, channel_var=1.0, snr_db=12.0)
    asn = DeviceAssignment.round_robin(9, 3)
    rng = np.random.default_rng(7)
    codebook = generate_codebook(cfg, rng)
    events = sample_events(cfg, rng, 30)
    est = sample_estimates(events, asn, ObservationModel(), cfg)
    channels = sample_channels(cfg, rng, 30)
    signals = build_sparse_signal(est, asn, channels, cfg)
    received = transmit(signals, codebook, cfg, rng=rng)
    return cfg, asn, codebook, events, received.samples


def test_get_params_and_clone(setup):
    cfg, asn, codebook, _, _ = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn,
                     quant_var=0.3, threshold=1.5)
    params = det.get_params()
    assert params["quant_var"] == 0.3
    twin = clone(det)
    assert np.array_equal(twin.codebook.matrix, codebook.matrix)
    assert twin.system == cfg
    assert twin.threshold == 1.5
    assert not hasattr(twin, "threshold_")
    det.set_params(threshold=-1.0)
    assert det.threshold == -1.0


def test_decision_function_matches_functional_layer(setup):
    cfg, asn, codebook, _, samples = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn)
    llrs = det.decision_function(samples)
    direct = qf_detect(samples, codebook, cfg, asn)
    assert np.array_equal(llrs, direct.llrs)


def test_fit_sets_threshold_and_predict_uses_it(setup):
    cfg, asn, codebook, events, samples = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn,
                     threshold=5.0, threshold_grid=(-5.0, 5.0, 0.5))
    before = det.predict(samples)
    assert np.array_equal(before, decide(det.decision_function(samples), 5.0))
    det.fit(samples, events)
    assert hasattr(det, "threshold_")
    assert len(det.error_curve_) == len(det.threshold_grid_)
    after = det.predict(samples)
    assert np.array_equal(
        after, decide(det.decision_function(samples), det.threshold_))
    # the calibrated threshold can only improve the training error
    assert np.mean(after != events) <= np.mean(before != events)


def test_score_is_slot_accuracy(setup):
    cfg, asn, codebook, events, samples = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn)
    pred = det.predict(samples)
    assert det.score(samples, events) == pytest.approx(np.mean(pred == events))


def test_flattened_input_equivalent(setup):
    cfg, asn, codebook, _, samples = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn)
    flat = samples.reshape(samples.shape[0], -1)
    assert np.array_equal(det.decision_function(flat),
                          det.decision_function(samples))


def test_bad_shapes_raise(setup):
    cfg, asn, codebook, events, samples = setup
    det = QfDetector(codebook=codebook, system=cfg, assignment=asn)
    with pytest.raises(ValueError):
        det.decision_function(samples[:, :1, :])  # node count mismatch
    with pytest.raises(ValueError):
        det.fit(samples, events + 10)  # labels out of range
    with pytest.raises(ValueError):
        QfDetector(system=cfg).decision_function(samples)  # no codebook


def test_dtf_detector_matches_vectorized_pipeline(setup):
    cfg, asn, codebook, _, samples = setup
    fh = FronthaulConfig(bit_budget=64.0, scheme="dtf", llr_clip=12.0)
    det = DtfDetector(codebook=codebook, system=cfg, assignment=asn,
                      fronthaul=fh)
    fused = det.decision_function(samples)

    trials, nodes = samples.shape[:2]
    folded = samples.reshape(trials * nodes, 1, -1)
    local = dtf_local_detect(folded, codebook, cfg, asn)
    llrs = local.llrs.reshape(trials, nodes, cfg.num_events, cfg.num_values)
    flags = decide(llrs, 0.0) != 0
    recon, _ = dtf_roundtrip_llrs(llrs, flags, fh.bit_budget, fh.llr_clip,
                                  fh.dtf_allocation)
    assert np.allclose(fused, recon.sum(axis=1), atol=1e-12)


def test_dtf_detector_fit_predict(setup):
    cfg, asn, codebook, events, samples = setup
    det = DtfDetector(codebook=codebook, system=cfg, assignment=asn,
                      fronthaul=FronthaulConfig(bit_budget=96.0, scheme="dtf"),
                      threshold_grid=(-8.0, 8.0, 0.5))
    det.fit(samples, events)
    pred = det.predict(samples)
    assert pred.shape == events.shape
    assert det.score(samples, events) >= 0.5
