"""Input validation helpers shared by the estimator front ends."""

from __future__ import annotations

import numpy as np


def check_received_blocks(x, num_nodes: int, block_len: int) -> np.ndarray:
    """Coerce input into (trials, num_nodes, block_len) complex blocks.

    Accepts (nodes, n) for a single trial, (trials, nodes, n), or the
    flattened 2-D form (trials, nodes * n) that array pipelines favor.
    """
    x = np.asarray(x)
    if x.ndim == 2 and x.shape == (num_nodes, block_len):
        x = x[None]
    elif x.ndim == 2 and x.shape[1] == num_nodes * block_len:
        x = x.reshape(x.shape[0], num_nodes, block_len)
    if x.ndim != 3 or x.shape[1:] != (num_nodes, block_len):
        raise ValueError(
            f"expected blocks shaped (trials, {num_nodes}, {block_len}) or "
            f"(trials, {num_nodes * block_len}), got {x.shape}"
        )
    x = np.asarray(x, dtype=np.complex128)
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise ValueError("received blocks contain non-finite samples")
    return x


def check_event_labels(y, trials: int, num_events: int, num_values: int) -> np.ndarray:
    """Coerce truth labels into (trials, num_events) integers in range."""
    y = np.asarray(y)
    if y.ndim == 1 and trials == 1 and y.shape[0] == num_events:
        y = y[None]
    if y.ndim != 2 or y.shape != (trials, num_events):
        raise ValueError(
            f"expected labels shaped ({trials}, {num_events}), got {y.shape}"
        )
    y = y.astype(np.int64)
    if y.min(initial=0) < 0 or y.max(initial=0) > num_values:
        raise ValueError(f"labels must lie in [0, {num_values}]")
    return y
