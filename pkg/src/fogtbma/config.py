"""Scenario configuration and validation.

All configuration objects are frozen dataclasses so they can be shared
freely between trials and worker processes.  ``validate_configs`` returns
a report instead of raising, so a caller (or the CLI) can show every
violation at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Malformed configuration input (bad JSON shape, unknown keys)."""


def _strict_fields(cls, data: dict, where: str):
    """Build a dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return cls(**data)


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one deployment.

    num_events       number of monitored events
    num_values       non-zero values each event can take (0 means inactive)
    num_devices      sensing devices
    num_edge_nodes   edge nodes, one received block each
    codeword_length  complex samples per codeword
    activation_prob  probability an event is active in a given slot
    channel_var      variance of the device-to-node fading coefficients
    snr_db           per-user SNR in dB; noise variance is 10^(-snr_db/10)
    transmit_on_active  devices stay silent for value-0 blocks when true
    codebook_kind    "gaussian" or "orthogonal"
    """

    num_events: int = 8
    num_values: int = 4
    num_devices: int = 80
    num_edge_nodes: int = 4
    codeword_length: int = 16
    activation_prob: float = 0.1
    channel_var: float = 1.0
    snr_db: float = 10.0
    transmit_on_active: bool = True
    codebook_kind: str = "gaussian"

    @property
    def noise_var(self) -> float:
        return float(10.0 ** (-self.snr_db / 10.0))

    @property
    def num_coefficients(self) -> int:
        """Columns of the codebook: one per (event, value) pair."""
        return self.num_events * (self.num_values + 1)


def _round_robin(num_devices: int, num_events: int):
    if num_events < 1:  # leave the violation to validate_configs
        return tuple(() for _ in range(max(num_devices, 0)))
    return tuple((k % num_events,) for k in range(num_devices))


@dataclass(frozen=True)
class DeviceAssignment:
    """Which events each device monitors.

    ``monitored[k]`` lists the event indices device k reports on.  The
    inverse map (devices per event) is derived, never stored separately.
    """

    monitored: tuple

    def __init__(self, monitored: Sequence[Sequence[int]]):
        object.__setattr__(
            self, "monitored", tuple(tuple(int(m) for m in row) for row in monitored)
        )

    @staticmethod
    def round_robin(num_devices: int, num_events: int) -> "DeviceAssignment":
        """Disjoint near-equal groups: device k monitors event k mod M."""
        return DeviceAssignment(_round_robin(num_devices, num_events))

    def groups(self, num_events: int):
        """Devices monitoring each event, derived from ``monitored``."""
        out = [[] for _ in range(num_events)]
        for k, row in enumerate(self.monitored):
            for m in row:
                if 0 <= m < num_events:
                    out[m].append(k)
        return tuple(tuple(g) for g in out)

    def group_sizes(self, num_events: int) -> np.ndarray:
        return np.array([len(g) for g in self.groups(num_events)], dtype=np.int64)


@dataclass(frozen=True)
class ObservationModel:
    """Local estimate statistics: a symmetric flip channel.

    With probability 1 - flip_prob a device observes the true event value;
    otherwise it observes a value drawn uniformly from the other ones.
    """

    flip_prob: float = 0.0


@dataclass(frozen=True)
class FronthaulConfig:
    """Fronthaul budget and compression scheme for each edge node.

    bit_budget       bits per edge node per fronthaul use (may be inf)
    scheme           "qf_test_channel", "qf_uniform" or "dtf"
    llr_clip         clipping range (nats) for quantized LLRs
    power_estimate_mode  "empirical" (per-block mean power) or "nominal"
    dtf_allocation   "pooled" shares the post-flag bit budget among the
                     flagged events; "per_event" gives every event a fixed
                     slice of the budget whether or not it is flagged
    sample_clip_sigmas  half-range of the uniform sample quantizer, in
                     per-real-dimension standard deviations of the block
    """

    bit_budget: float = 320
    scheme: str = "qf_test_channel"
    llr_clip: float = 20.0
    power_estimate_mode: str = "empirical"
    dtf_allocation: str = "pooled"
    sample_clip_sigmas: float = 4.0


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "configuration ok"
        return "\n".join(f"- {v}" for v in self.violations)


def event_prior(cfg: SystemConfig) -> np.ndarray:
    """Prior over a single event's value: [1-rho, rho/R, ..., rho/R]."""
    rho, r = cfg.activation_prob, cfg.num_values
    prior = np.empty(r + 1, dtype=np.float64)
    prior[0] = 1.0 - rho
    prior[1:] = rho / r
    return prior


def validate_configs(
    system: SystemConfig,
    assignment: DeviceAssignment | None = None,
    fronthaul: FronthaulConfig | None = None,
    observation: ObservationModel | None = None,
) -> ValidationReport:
    """Check cross-field consistency; returns all violations found."""
    v = []
    s = system
    for name in ("num_events", "num_values", "num_devices", "num_edge_nodes", "codeword_length"):
        if getattr(s, name) < 1:
            v.append(f"system.{name} must be >= 1")
    if not (0.0 <= s.activation_prob <= 1.0):
        v.append("system.activation_prob must be in [0, 1]")
    if s.channel_var < 0.0:
        v.append("system.channel_var must be >= 0")
    if math.isnan(s.snr_db):
        v.append("system.snr_db must not be NaN")
    if s.codebook_kind not in ("gaussian", "orthogonal"):
        v.append(f"system.codebook_kind unknown: {s.codebook_kind!r}")
    if s.codebook_kind == "orthogonal" and s.codeword_length < s.num_coefficients:
        v.append(
            "orthogonal codebook needs codeword_length >= "
            f"num_events*(num_values+1) = {s.num_coefficients}, got {s.codeword_length}"
        )

    if assignment is not None:
        if len(assignment.monitored) != s.num_devices:
            v.append(
                f"assignment covers {len(assignment.monitored)} devices, "
                f"system has {s.num_devices}"
            )
        for k, row in enumerate(assignment.monitored):
            if len(row) == 0:
                v.append(f"device {k} monitors no event")
            if len(set(row)) != len(row):
                v.append(f"device {k} lists an event twice")
            for m in row:
                if not (0 <= m < s.num_events):
                    v.append(f"device {k} monitors out-of-range event {m}")
        # Inverse-map consistency: groups must reproduce the monitored lists.
        groups = assignment.groups(s.num_events)
        for m, grp in enumerate(groups):
            for k in grp:
                if m not in assignment.monitored[k]:
                    v.append(f"group table inconsistent at event {m}, device {k}")

    if fronthaul is not None:
        if not (fronthaul.bit_budget > 0):
            v.append("fronthaul.bit_budget must be > 0")
        if fronthaul.llr_clip <= 0:
            v.append("fronthaul.llr_clip must be > 0")
        if fronthaul.scheme not in ("qf_test_channel", "qf_uniform", "dtf"):
            v.append(f"fronthaul.scheme unknown: {fronthaul.scheme!r}")
        if fronthaul.power_estimate_mode not in ("empirical", "nominal"):
            v.append(
                f"fronthaul.power_estimate_mode unknown: {fronthaul.power_estimate_mode!r}"
            )
        if fronthaul.dtf_allocation not in ("pooled", "per_event"):
            v.append(f"fronthaul.dtf_allocation unknown: {fronthaul.dtf_allocation!r}")
        if fronthaul.sample_clip_sigmas <= 0:
            v.append("fronthaul.sample_clip_sigmas must be > 0")

    if observation is not None:
        if not (0.0 <= observation.flip_prob < 1.0):
            v.append("observation.flip_prob must be in [0, 1)")
        if observation.flip_prob > 0 and s.num_values < 1:
            v.append("flip_prob > 0 needs at least one non-zero value")

    return ValidationReport(tuple(v))


def system_from_dict(d: dict) -> SystemConfig:
    return _strict_fields(SystemConfig, d, "system")


def assignment_from_dict(d: dict) -> DeviceAssignment:
    if not isinstance(d, dict) or set(d) - {"monitored"}:
        raise ConfigError("assignment: expected an object with key 'monitored'")
    if "monitored" not in d:
        raise ConfigError("assignment: missing key 'monitored'")
    return DeviceAssignment(d["monitored"])


def fronthaul_from_dict(d: dict) -> FronthaulConfig:
    if isinstance(d, dict) and d.get("bit_budget") in ("inf", "Infinity"):
        d = dict(d, bit_budget=math.inf)
    return _strict_fields(FronthaulConfig, d, "fronthaul")


def observation_from_dict(d: dict) -> ObservationModel:
    return _strict_fields(ObservationModel, d, "observation")
