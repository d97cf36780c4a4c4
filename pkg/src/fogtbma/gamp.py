"""Generalized approximate message passing over a shared mixing matrix.

The engine solves y = A x + w per edge node, where every node applies
the same codeword matrix.  A problem carries blocks shaped
(..., num_nodes, n); the block-diagonal joint operator over nodes is
never materialized, each node is one row batch through the shared
matrix.  Leading axes are Monte Carlo trials and are vectorized.

The output channel is additive complex Gaussian with a per-node (or
per-sample) effective variance, so fronthaul quantization noise folds in
by adding its variance.  The input channel (prior) is pluggable: any
object with ``prior_variance()`` and ``__call__(r, tau_r) -> (x_hat,
tau_x, extras)``.

Update order per iteration, with damping beta on x_hat, tau_x and s:

  tau_p = |A|^2 tau_x           p = A x_hat - tau_p * s
  s     = (E[z|p,y] - p)/tau_p  tau_s = (1 - V[z|p,y]/tau_p)/tau_p
  tau_r = 1 / (|A|^2^T tau_s)   r = x_hat + tau_r * (A^H s)
  x_hat, tau_x = denoiser(r, tau_r)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteStateError(FloatingPointError):
    """The message-passing state left the finite range (divergence)."""


@dataclass(frozen=True)
class GampOptions:
    max_iters: int = 50
    tol: float = 1e-6
    damping: float = 0.7
    variance_floor: float = 1e-12


@dataclass(frozen=True)
class GampProblem:
    mixing: np.ndarray      # (n, j) complex, shared by all nodes
    observed: np.ndarray    # (..., num_nodes, n) complex
    noise_var: np.ndarray   # broadcastable to observed's shape, >= 0
    denoiser: object


@dataclass
class GampResult:
    x_hat: np.ndarray
    tau_x: np.ndarray
    r: np.ndarray
    tau_r: np.ndarray
    extras: dict
    iterations: int
    converged: np.ndarray   # per-trial flags (scalar bool array if unbatched)
    residual: np.ndarray
    trace: list = field(default_factory=list)


def awgn_output_moments(p, tau_p, y, noise_var):
    """Posterior mean and variance of the noiseless output z given
    the Gaussian pseudo-prior CN(p, tau_p) and observation y = z + w."""
    denom = tau_p + noise_var
    z_hat = (tau_p * y + noise_var * p) / denom
    tau_z = tau_p * noise_var / denom
    return z_hat, tau_z


def run_gamp(problem: GampProblem, options: GampOptions | None = None,
             trace: bool = False) -> GampResult:
    opts = options or GampOptions()
    if not (0.0 < opts.damping <= 1.0):
        raise ValueError("damping must be in (0, 1]")
    floor = opts.variance_floor
    beta = opts.damping

    a = np.asarray(problem.mixing, dtype=np.complex128)
    abs2 = np.abs(a) ** 2
    y = np.asarray(problem.observed, dtype=np.complex128)
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError("observed block contains non-finite samples")
    noise_var = np.broadcast_to(np.asarray(problem.noise_var, dtype=np.float64),
                                y.shape)
    den = problem.denoiser

    batch = y.shape[:-2]
    num_nodes = y.shape[-2]
    j = a.shape[1]
    x = np.zeros(batch + (num_nodes, j), dtype=np.complex128)
    tau_x = np.broadcast_to(
        np.maximum(np.asarray(den.prior_variance(), dtype=np.float64), floor),
        x.shape,
    ).copy()
    s = np.zeros_like(y)

    sum_axes = tuple(range(len(batch), x.ndim))  # node and coefficient axes
    converged = np.zeros(batch, dtype=bool) if batch else np.zeros((), dtype=bool)
    residual = np.full_like(converged, np.inf, dtype=np.float64)
    iterations = 0
    trace_rows: list = []
    r = x
    tau_r = tau_x
    extras: dict = {}

    for iterations in range(1, opts.max_iters + 1):
        tau_p = np.maximum(tau_x @ abs2.T, floor)
        p = x @ a.T - tau_p * s
        z_hat, tau_z = awgn_output_moments(p, tau_p, y, noise_var)
        s_new = (z_hat - p) / tau_p
        tau_s = np.maximum((1.0 - tau_z / tau_p) / tau_p, floor)
        s = beta * s_new + (1.0 - beta) * s

        tau_r = np.maximum(1.0 / (tau_s @ abs2), floor)
        r = x + tau_r * (s @ np.conj(a))
        x_new, tau_x_new, extras = den(r, tau_r)

        x_prev = x
        x = beta * x_new + (1.0 - beta) * x_prev
        tau_x = np.maximum(beta * tau_x_new + (1.0 - beta) * tau_x, floor)

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(tau_x))
                and np.all(np.isfinite(s))):
            raise NonFiniteStateError(
                f"non-finite state at iteration {iterations}"
            )

        diff = np.sqrt(np.sum(np.abs(x - x_prev) ** 2, axis=sum_axes))
        scale = np.maximum(np.sqrt(np.sum(np.abs(x) ** 2, axis=sum_axes)), 1e-30)
        residual = diff / scale
        if trace:
            trace_rows.append(
                (iterations, float(np.max(residual)), float(np.mean(tau_x)))
            )
        converged = residual < opts.tol
        if np.all(converged):
            break

    return GampResult(
        x_hat=x, tau_x=tau_x, r=r, tau_r=tau_r, extras=extras,
        iterations=iterations, converged=converged, residual=residual,
        trace=trace_rows,
    )


def write_trace_csv(path: str, rows, header: bool = True) -> None:
    """Dump per-iteration (iteration, residual, mean_tau_x) rows as CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write("iteration,residual,mean_tau_x\n")
        for it, res, mtx in rows:
            fh.write(f"{it},{res:.10g},{mtx:.10g}\n")
