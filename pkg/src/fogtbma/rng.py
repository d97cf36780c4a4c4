"""Counter-based random streams.

Every random draw in a simulation is tied to a (master_seed, stream_id)
pair fed to a Philox counter-based generator, so trials can be produced
in any order (or in parallel) and still give bit-identical results.

Stream ids encode (trial index, role) with the lowest bit reserved to
separate calibration draws from evaluation draws, so the two phases of
an experiment never share randomness.  Experiment-scoped streams (the
codebook) live in a disjoint high range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Roles, one independent stream per role per trial.
ROLE_CODEBOOK = 0
ROLE_EVENTS = 1
ROLE_ESTIMATES = 2
ROLE_CHANNEL = 3
ROLE_NOISE = 4
ROLE_QUANT = 5
NUM_ROLES = 6

_EXPERIMENT_BASE = 1 << 62


@dataclass(frozen=True)
class RandomSource:
    """A reproducible random stream: equal fields, equal draws."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed % (1 << 64), self.stream_id % (1 << 64)],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_id: int) -> "RandomSource":
        return RandomSource(self.master_seed, stream_id)


def trial_stream_id(trial: int, role: int, calibration: bool = False) -> int:
    """Stream id for one role of one trial.

    Calibration and evaluation get disjoint streams via the parity bit.
    """
    if trial < 0 or role < 0 or role >= NUM_ROLES:
        raise ValueError(f"bad trial/role ({trial}, {role})")
    return ((trial * NUM_ROLES + role) << 1) | int(bool(calibration))


def experiment_stream_id(role: int, tag: int = 0) -> int:
    """Stream id for experiment-scoped draws (e.g. the shared codebook).

    ``tag`` distinguishes variants, such as codebooks of different length.
    """
    return _EXPERIMENT_BASE | ((tag * NUM_ROLES + role) << 1)


def trial_generator(
    master_seed: int, trial: int, role: int, calibration: bool = False
) -> np.random.Generator:
    sid = trial_stream_id(trial, role, calibration)
    return RandomSource(master_seed, sid).generator()
