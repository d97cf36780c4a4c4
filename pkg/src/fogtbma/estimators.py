"""Estimator-style front ends for the decoders.

Wraps the functional decoding layer in the fit/predict idiom so the
detectors drop into pipelines and parameter searches: ``fit`` calibrates
the decision threshold on labeled blocks, ``decision_function`` returns
LLR matrices and ``predict`` returns event decisions.  All randomness
lives in the data; the estimators themselves are deterministic.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .config import DeviceAssignment, FronthaulConfig, SystemConfig
from .detection import (decide, default_threshold_grid, dtf_local_detect,
                        fuse_llrs, optimize_threshold, qf_detect)
from .fronthaul import dtf_dequantize, dtf_quantize
from .gamp import GampOptions
from .scenario import Codebook
from .validation import check_event_labels, check_received_blocks


class _DetectorBase(BaseEstimator):
    def _blocks(self, x, num_nodes):
        system = self.system or SystemConfig()
        return system, check_received_blocks(
            x, num_nodes, system.codeword_length
        )

    def fit(self, x, y):
        """Calibrate the decision threshold on labeled blocks."""
        llrs = self.decision_function(x)
        system = self.system or SystemConfig()
        y = check_event_labels(np.asarray(y), llrs.shape[0],
                               system.num_events, system.num_values)
        grid = default_threshold_grid(*self.threshold_grid)
        self.threshold_, self.error_curve_ = optimize_threshold(llrs, y, grid)
        self.threshold_grid_ = grid
        return self

    def predict(self, x):
        llrs = self.decision_function(x)
        threshold = getattr(self, "threshold_", self.threshold)
        return decide(llrs, threshold)

    def score(self, x, y):
        """Fraction of correctly decided event slots (1 - error rate)."""
        pred = self.predict(x)
        system = self.system or SystemConfig()
        y = check_event_labels(np.asarray(y), pred.shape[0],
                               system.num_events, system.num_values)
        return float(np.mean(pred == y))


class QfDetector(_DetectorBase):
    """Joint decoder over all edge-node blocks (quantize-and-forward).

    Parameters mirror the functional layer: the shared codebook, system
    and assignment configs, the fronthaul noise variance already present
    on the blocks (0 for unquantized fronthaul), and engine options.
    ``threshold`` is used until ``fit`` learns ``threshold_``.
    """

    def __init__(self, codebook=None, system=None, assignment=None,
                 quant_var=0.0, gamp_options=None, threshold=0.0,
                 threshold_grid=(-20.0, 20.0, 0.1)):
        self.codebook = codebook
        self.system = system
        self.assignment = assignment
        self.quant_var = quant_var
        self.gamp_options = gamp_options
        self.threshold = threshold
        self.threshold_grid = threshold_grid

    def decision_function(self, x):
        if self.codebook is None:
            raise ValueError("QfDetector needs a codebook")
        system = self.system or SystemConfig()
        assignment = self.assignment or DeviceAssignment.round_robin(
            system.num_devices, system.num_events
        )
        system, blocks = self._blocks(x, system.num_edge_nodes)
        res = qf_detect(blocks, self.codebook, system, assignment,
                        quant_var=self.quant_var,
                        options=self.gamp_options or GampOptions())
        return res.llrs


class DtfDetector(_DetectorBase):
    """Per-node decoding, LLR quantization and additive fusion
    (detect-and-forward).

    ``fronthaul`` supplies the bit budget, clip range and allocation for
    the LLR payloads; ``local_threshold`` drives each node's activity
    flags.
    """

    def __init__(self, codebook=None, system=None, assignment=None,
                 fronthaul=None, gamp_options=None, local_threshold=0.0,
                 threshold=0.0, threshold_grid=(-20.0, 20.0, 0.1)):
        self.codebook = codebook
        self.system = system
        self.assignment = assignment
        self.fronthaul = fronthaul
        self.gamp_options = gamp_options
        self.local_threshold = local_threshold
        self.threshold = threshold
        self.threshold_grid = threshold_grid

    def decision_function(self, x):
        if self.codebook is None:
            raise ValueError("DtfDetector needs a codebook")
        system = self.system or SystemConfig()
        assignment = self.assignment or DeviceAssignment.round_robin(
            system.num_devices, system.num_events
        )
        fronthaul = self.fronthaul or FronthaulConfig(scheme="dtf")
        system, blocks = self._blocks(x, system.num_edge_nodes)
        trials, num_nodes = blocks.shape[0], blocks.shape[1]

        folded = blocks.reshape(trials * num_nodes, 1, -1)
        local = dtf_local_detect(folded, self.codebook, system, assignment,
                                 options=self.gamp_options or GampOptions())
        local_llrs = local.llrs.reshape(trials, num_nodes,
                                        system.num_events, system.num_values)
        fused = np.zeros((trials, system.num_events, system.num_values))
        for t in range(trials):
            recon = []
            for c in range(num_nodes):
                flags = decide(local_llrs[t, c], self.local_threshold)
                payload = dtf_quantize(local_llrs[t, c], flags,
                                       fronthaul.bit_budget,
                                       fronthaul.llr_clip,
                                       fronthaul.dtf_allocation)
                recon.append(dtf_dequantize(payload))
            fused[t] = fuse_llrs(recon)
        return fused
