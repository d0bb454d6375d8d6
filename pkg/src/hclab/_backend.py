"""Hot-loop kernels with runtime backend selection.

Two interchangeable implementations exist for the inner loops that
dominate runtime (message function over arrays, segmented gather-sums for
population dynamics, the message-passing sweep):

* ``hclab._fastcore`` -- a compiled Cython extension, used when importable;
* the NumPy fallbacks in this module.

Set ``HCLAB_PURE=1`` to force the fallback.  All random numbers are drawn
by the caller from a shared ``numpy`` generator, so the two backends
consume identical random streams; results are bit-reproducible within a
backend and agree to float rounding (~1e-13 relative) across backends.
``python -m hclab.bench`` times the two side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "f_values",
    "segment_sum",
    "gather_segment_sum",
    "bp_pass",
    "bp_field_sums",
]


def f_values_pure(xi: np.ndarray, rho: float) -> np.ndarray:
    """Elementwise log((1 + rho e^xi) / (1 + e^xi)), overflow-free.

    Branches on the sign of xi so exp() is only ever called on
    non-positive arguments; +/-inf land on the analytic limits.
    """
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    out = np.empty_like(xi)
    neg = xi < 0.0
    e = np.exp(xi[neg])
    out[neg] = np.log1p(rho * e) - np.log1p(e)
    e = np.exp(-xi[~neg])
    out[~neg] = math.log(rho) + np.log1p(e / rho) - np.log1p(e)
    return out


def _nonempty_offsets(counts: np.ndarray):
    offsets = np.zeros(counts.shape[0], dtype=np.intp)
    np.cumsum(counts[:-1], out=offsets[1:])
    nz = counts > 0
    return offsets, nz


def segment_sum_pure(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sums of consecutive runs of ``values``; run i has length counts[i]."""
    out = np.zeros(counts.shape[0], dtype=np.float64)
    if values.shape[0] == 0:
        return out
    offsets, nz = _nonempty_offsets(counts)
    # reduceat over the nonempty offsets only: each segment then ends at
    # the next listed offset, which skips the zero-length runs correctly.
    out[nz] = np.add.reduceat(values, offsets[nz])
    return out


def gather_segment_sum_pure(
    values: np.ndarray, idx: np.ndarray, counts: np.ndarray
) -> np.ndarray:
    """out[i] = sum over segment i of values[idx[.]] (segments from counts)."""
    if idx.shape[0] == 0:
        return np.zeros(counts.shape[0], dtype=np.float64)
    return segment_sum_pure(values[idx], counts)


def bp_pass_pure(
    msg: np.ndarray,
    tail: np.ndarray,
    head: np.ndarray,
    n: int,
    rho: float,
    h: float,
) -> np.ndarray:
    """One synchronous message sweep.

    Directed edges are stored interleaved: entries 2e and 2e+1 are the two
    orientations of undirected edge e, so the reverse of message d is d^1.
    new[d] = h + sum_{k -> tail(d)} f(msg) - f(msg[reverse(d)]).
    """
    fm = f_values_pure(msg, rho)
    sums = np.bincount(head, weights=fm, minlength=n)
    fm_rev = fm.reshape(-1, 2)[:, ::-1].ravel()
    return h + sums[tail] - fm_rev


def bp_field_sums_pure(
    msg: np.ndarray, head: np.ndarray, n: int, rho: float
) -> np.ndarray:
    """Per-vertex sums of f over incoming messages (no external field)."""
    fm = f_values_pure(msg, rho)
    return np.bincount(head, weights=fm, minlength=n)


_fast = None
if os.environ.get("HCLAB_PURE", "") in ("", "0"):
    try:
        from . import _fastcore as _fast  # type: ignore[attr-defined]
    except ImportError:
        _fast = None

if _fast is not None:
    BACKEND = "compiled"
    f_values = _fast.f_values
    segment_sum = _fast.segment_sum
    gather_segment_sum = _fast.gather_segment_sum
    bp_pass = _fast.bp_pass
    bp_field_sums = _fast.bp_field_sums
else:
    BACKEND = "pure"
    f_values = f_values_pure
    segment_sum = segment_sum_pure
    gather_segment_sum = gather_segment_sum_pure
    bp_pass = bp_pass_pure
    bp_field_sums = bp_field_sums_pure
