"""Link-level simulator for semantics-aware grant-free random access.

Devices signal locally estimated event values over shared non-orthogonal
codewords; edge nodes forward compressed observations over a finite
fronthaul (quantize-and-forward or detect-and-forward) and a central
processor recovers each event's value with an approximate message
passing decoder and a group-structured prior.
"""

from .config import (ConfigError, DeviceAssignment, FronthaulConfig,
                     ObservationModel, SystemConfig, ValidationReport,
                     event_prior, validate_configs)
from .denoiser import EventGroupDenoiser, GaussianDenoiser, GroupPrior
from .detection import (DetectionResult, ThresholdPolicy, decide,
                        default_threshold_grid, dtf_local_detect, fuse_llrs,
                        optimize_threshold, qf_detect, threshold_replay)
from .estimators import DtfDetector, QfDetector
from .experiments import (BudgetGrid, ExperimentSpec, RocSweep, SnrSweep,
                          ThresholdGridSpec, csv_text, load_spec,
                          run_required_snr, run_roc, run_snr_sweep)
from .fronthaul import (BudgetTooSmallError, DtfPayload, QuantizedBlock,
                        deserialize_payload, dtf_dequantize, dtf_quantize,
                        nominal_received_power, qf_test_channel,
                        qf_uniform_quantize, serialize_payload,
                        quantization_noise_var)
from .gamp import (GampOptions, GampProblem, GampResult, NonFiniteStateError,
                   run_gamp)
from .metrics import (MetricsAccumulator, MetricsReport, accumulate, finalize,
                      wilson_interval)
from .rng import RandomSource, experiment_stream_id, trial_generator
from .scenario import (Codebook, ReceivedBlocks, build_sparse_signal,
                       encode_measurement, generate_codebook, sample_channels,
                       sample_estimates, sample_events, transmit)

__version__ = "0.1.0"

__all__ = [
    "BudgetGrid", "BudgetTooSmallError", "Codebook", "ConfigError",
    "DetectionResult", "DeviceAssignment", "DtfDetector", "DtfPayload",
    "EventGroupDenoiser", "ExperimentSpec", "FronthaulConfig",
    "GampOptions", "GampProblem", "GampResult", "GaussianDenoiser",
    "GroupPrior", "MetricsAccumulator", "MetricsReport",
    "NonFiniteStateError", "ObservationModel", "QfDetector",
    "QuantizedBlock", "RandomSource", "ReceivedBlocks", "RocSweep",
    "SnrSweep", "SystemConfig", "ThresholdGridSpec", "ThresholdPolicy",
    "ValidationReport", "accumulate", "build_sparse_signal", "csv_text",
    "decide", "default_threshold_grid", "deserialize_payload",
    "dtf_dequantize", "dtf_local_detect", "dtf_quantize",
    "encode_measurement", "event_prior", "experiment_stream_id",
    "finalize", "fuse_llrs", "generate_codebook", "load_spec",
    "nominal_received_power", "optimize_threshold", "qf_detect",
    "qf_test_channel", "qf_uniform_quantize", "run_gamp",
    "run_required_snr", "run_roc", "run_snr_sweep", "sample_channels",
    "sample_estimates", "sample_events", "serialize_payload",
    "quantization_noise_var", "threshold_replay", "transmit",
    "trial_generator", "validate_configs", "wilson_interval",
]
