"""Scenario generation: events, local estimates, codebook, channels, air link.

Coefficient layout used throughout: the sparse vector seen by one edge
node has one complex entry per (event, value) pair, flattened so that
index j = m * (num_values + 1) + r holds event m, value r.  Value 0 is
the inactive codeword slot.

Most functions accept a leading trial axis so whole Monte Carlo batches
are produced with vectorized numpy calls; a missing trial axis means a
single trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DeviceAssignment, ObservationModel, SystemConfig


@dataclass(frozen=True)
class Codebook:
    """Shared codeword matrix, one column per (event, value) pair."""

    matrix: np.ndarray  # (codeword_length, num_coefficients) complex
    kind: str

    @property
    def codeword_length(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ReceivedBlocks:
    """Per-node received samples plus the noiseless part for oracles."""

    samples: np.ndarray    # (..., num_edge_nodes, codeword_length) complex
    noiseless: np.ndarray  # same shape, S @ x with no noise
    noise_var: float


def _standard_complex(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex normal with unit variance per entry."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.sqrt(2.0)


def generate_codebook(cfg: SystemConfig, rng: np.random.Generator) -> Codebook:
    n, j = cfg.codeword_length, cfg.num_coefficients
    if cfg.codebook_kind == "gaussian":
        # i.i.d. entries with variance 1/n so codewords have unit mean energy.
        mat = _standard_complex(rng, (n, j)) / np.sqrt(n)
    elif cfg.codebook_kind == "orthogonal":
        if n < j:
            raise ValueError(
                f"orthogonal codebook needs codeword_length >= {j}, got {n}"
            )
        q, _ = np.linalg.qr(_standard_complex(rng, (n, j)))
        mat = q[:, :j]
    else:
        raise ValueError(f"unknown codebook kind {cfg.codebook_kind!r}")
    return Codebook(matrix=mat, kind=cfg.codebook_kind)


def sample_events(
    cfg: SystemConfig, rng: np.random.Generator, trials: int | None = None
) -> np.ndarray:
    """Draw event values: 0 with prob 1-rho, else uniform over 1..R."""
    shape = (cfg.num_events,) if trials is None else (trials, cfg.num_events)
    active = rng.random(shape) < cfg.activation_prob
    values = rng.integers(1, cfg.num_values + 1, size=shape)
    return np.where(active, values, 0).astype(np.int64)


def sample_estimates(
    events: np.ndarray,
    assignment: DeviceAssignment,
    obs: ObservationModel,
    cfg: SystemConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-device local estimates for every monitored event.

    Returns an integer array with trailing shape (num_devices, num_events);
    entries for unmonitored (device, event) pairs are -1.  A flipped
    estimate is uniform over the values that differ from the truth.
    """
    events = np.asarray(events)
    num_devices = len(assignment.monitored)
    monitored = np.zeros((num_devices, cfg.num_events), dtype=bool)
    for k, row in enumerate(assignment.monitored):
        monitored[k, list(row)] = True

    shape = events.shape[:-1] + (num_devices, cfg.num_events)
    truth = np.broadcast_to(events[..., None, :], shape)
    est = np.array(truth, dtype=np.int64)
    if obs.flip_prob > 0.0:
        if rng is None:
            raise ValueError("flip_prob > 0 needs an rng")
        flips = rng.random(shape) < obs.flip_prob
        # Uniform over {0..R} minus the truth: draw in {0..R-1}, step over it.
        alt = rng.integers(0, cfg.num_values, size=shape)
        alt = alt + (alt >= truth)
        est = np.where(flips, alt, est)
    est[..., ~monitored] = -1
    return est


def encode_measurement(
    estimates_row: np.ndarray, monitored_events, cfg: SystemConfig
) -> np.ndarray:
    """One device's stacked one-hot selection vector.

    ``estimates_row`` holds the device's estimate per event (-1 where
    unmonitored).  Each event block is the indicator of the selected
    codeword: the estimated value for monitored events, value 0 for the
    rest.  Under ``transmit_on_active`` every value-0 block becomes
    all-zero instead: the device keeps quiet about inactive as well as
    unmonitored events.
    """
    monitored_events = set(int(m) for m in monitored_events)
    width = cfg.num_values + 1
    out = np.zeros(cfg.num_events * width, dtype=np.float64)
    for m in range(cfg.num_events):
        r = int(estimates_row[m]) if m in monitored_events else 0
        r = max(r, 0)
        if r == 0 and cfg.transmit_on_active:
            continue
        out[m * width + r] = 1.0
    return out


def sample_channels(
    cfg: SystemConfig, rng: np.random.Generator, trials: int | None = None
) -> np.ndarray:
    """Fading from each device to each edge node, i.i.d. CN(0, channel_var)."""
    shape = (cfg.num_edge_nodes, cfg.num_devices)
    if trials is not None:
        shape = (trials,) + shape
    return _standard_complex(rng, shape) * np.sqrt(cfg.channel_var)


def build_sparse_signal(
    estimates: np.ndarray,
    assignment: DeviceAssignment,
    channels: np.ndarray,
    cfg: SystemConfig,
) -> np.ndarray:
    """Superimposed coefficient vector per edge node.

    Entry (c, m*(R+1)+r) collects the fading of every device whose block
    m selects codeword r; identical to multiplying the stacked one-hot
    encodings by the channel matrix.  Accepts a leading trial axis on
    ``estimates`` and ``channels``.
    """
    estimates = np.asarray(estimates)
    channels = np.asarray(channels)
    single = estimates.ndim == 2
    if single:
        estimates = estimates[None]
        channels = channels[None]
    t = estimates.shape[0]
    width = cfg.num_values + 1
    num_nodes = channels.shape[1]
    x = np.zeros((t, num_nodes, cfg.num_events * width), dtype=np.complex128)
    node_ix = np.arange(num_nodes)[None, :]

    for k, row in enumerate(assignment.monitored):
        events_k = set(row)
        for m in range(cfg.num_events):
            if m in events_k:
                r = np.maximum(estimates[:, k, m], 0)
            elif cfg.transmit_on_active:
                continue  # silent block, nothing to add
            else:
                r = np.zeros(t, dtype=np.int64)
            if cfg.transmit_on_active:
                sel = np.nonzero(r > 0)[0]
                if sel.size == 0:
                    continue
                idx = (m * width + r[sel])[:, None]
                x[sel[:, None], node_ix, idx] += channels[sel, :, k]
            else:
                idx = (m * width + r)[:, None]
                x[np.arange(t)[:, None], node_ix, idx] += channels[:, :, k]
    return x[0] if single else x


def transmit(
    signals: np.ndarray,
    codebook: Codebook,
    cfg: SystemConfig,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> ReceivedBlocks:
    """Push coefficient vectors through the codebook and add receiver noise.

    ``noise`` may supply pre-drawn unit-variance complex normals (shaped
    like the output) so sweeps can reuse one noise realization across
    operating points; otherwise ``rng`` is drawn from.  With snr_db at
    +inf the received block equals the noiseless superposition exactly.
    """
    signals = np.asarray(signals, dtype=np.complex128)
    clean = signals @ codebook.matrix.T
    noise_var = cfg.noise_var
    if noise_var == 0.0:
        return ReceivedBlocks(samples=clean.copy(), noiseless=clean, noise_var=0.0)
    if noise is None:
        if rng is None:
            raise ValueError("transmit needs rng or pre-drawn noise")
        noise = _standard_complex(rng, clean.shape)
    samples = clean + np.sqrt(noise_var) * noise
    return ReceivedBlocks(samples=samples, noiseless=clean, noise_var=noise_var)
