"""Accumulated-cost kernels for dynamic time warping.

Two interchangeable implementations of the same recurrence: a
numba-compiled kernel that fuses the Euclidean cost matrix with the
dynamic program, and a vectorized numpy fallback that builds the cost
per channel and sweeps rows with a min-plus scan. Both compute the cost
of cell ``(i, j)`` from coordinate differences, so aligning a sequence
with itself yields an exactly zero diagonal in either backend.

Backend selection: the ``TENSORMOTION_BACKEND`` environment variable
(``auto``, ``numba`` or ``numpy``, read at import) picks the default;
:func:`use_backend` switches at runtime.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "ENV_VAR",
    "accumulated_cost",
    "active_backend",
    "available_backends",
    "use_backend",
    "warmup",
]

ENV_VAR = "TENSORMOTION_BACKEND"


def _accumulate_numpy(
    query: np.ndarray, reference: np.ndarray, open_begin: bool
) -> np.ndarray:
    n_q, n_channels = query.shape
    n_r = reference.shape[0]
    cost = np.zeros((n_q, n_r))
    for k in range(n_channels):
        d = query[:, k, None] - reference[None, :, k]
        cost += d * d
    np.sqrt(cost, out=cost)

    acc = np.empty_like(cost)
    acc[0] = cost[0] if open_begin else np.cumsum(cost[0])
    for i in range(1, n_q):
        row = cost[i]
        prev = acc[i - 1]
        # entering column k from the previous row costs enter[k]; any
        # further steps continue rightward along this row, so
        # acc[i, j] = min_{k<=j} enter[k] + (s[j] - s[k]) with s=cumsum
        enter = np.empty(n_r)
        enter[0] = prev[0]
        if n_r > 1:
            np.minimum(prev[1:], prev[:-1], out=enter[1:])
        enter += row
        s = np.cumsum(row)
        acc[i] = s + np.minimum.accumulate(enter - s)
    return acc


try:  # numba is optional at runtime; the numpy path covers its absence
    if os.environ.get(ENV_VAR, "auto") == "numpy":
        numba = None
    else:
        import numba
except ImportError:
    numba = None

if numba is not None:

    @numba.njit(cache=True)
    def _accumulate_numba_kernel(query, reference, open_begin):
        n_q, n_channels = query.shape
        n_r = reference.shape[0]
        cost = np.empty((n_q, n_r))
        for i in range(n_q):
            for j in range(n_r):
                s = 0.0
                for k in range(n_channels):
                    d = query[i, k] - reference[j, k]
                    s += d * d
                cost[i, j] = np.sqrt(s)
        acc = np.empty((n_q, n_r))
        if open_begin:
            for j in range(n_r):
                acc[0, j] = cost[0, j]
        else:
            acc[0, 0] = cost[0, 0]
            for j in range(1, n_r):
                acc[0, j] = acc[0, j - 1] + cost[0, j]
        for i in range(1, n_q):
            acc[i, 0] = acc[i - 1, 0] + cost[i, 0]
            for j in range(1, n_r):
                m = acc[i - 1, j]
                if acc[i, j - 1] < m:
                    m = acc[i, j - 1]
                if acc[i - 1, j - 1] < m:
                    m = acc[i - 1, j - 1]
                acc[i, j] = cost[i, j] + m
        return acc

    def _accumulate_numba(query, reference, open_begin):
        return _accumulate_numba_kernel(
            np.ascontiguousarray(query), np.ascontiguousarray(reference), open_begin
        )


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if numba is not None else ("numpy",)


def _resolve(name: str) -> str:
    if name == "auto":
        return "numba" if numba is not None else "numpy"
    if name == "numpy":
        return "numpy"
    if name == "numba":
        if numba is None:
            raise RuntimeError(
                f"numba backend requested via {ENV_VAR} but numba is unavailable"
            )
        return "numba"
    raise ValueError(f"unknown backend {name!r}; use auto, numba or numpy")


_active = _resolve(os.environ.get(ENV_VAR, "auto"))


def active_backend() -> str:
    """Name of the backend that will run the next alignment."""
    return _active


def use_backend(name: str) -> str:
    """Switch the alignment backend; returns the previous one."""
    global _active
    previous = _active
    _active = _resolve(name)
    return previous


def accumulated_cost(
    query: np.ndarray, reference: np.ndarray, open_begin: bool = False
) -> np.ndarray:
    """Accumulated-cost matrix of the warping recurrence.

    The cost of cell ``(i, j)`` is the Euclidean distance between query
    frame ``i`` and reference frame ``j``; allowed steps are one frame
    forward in the query, the reference, or both, with unit weights.
    With ``open_begin`` the query may start anywhere in the reference:
    the first row carries no accumulated prefix.
    """
    query = np.asarray(query, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if query.ndim != 2 or reference.ndim != 2:
        raise ValueError("query and reference must be 2-D (frames x channels)")
    if query.shape[1] != reference.shape[1]:
        raise ValueError(
            f"channel counts differ: {query.shape[1]} vs {reference.shape[1]}"
        )
    if query.shape[0] < 1 or reference.shape[0] < 1:
        raise ValueError("query and reference must be non-empty")
    if _active == "numba":
        return _accumulate_numba(query, reference, bool(open_begin))
    return _accumulate_numpy(query, reference, bool(open_begin))


def warmup() -> None:
    """Trigger JIT compilation so first-use latency stays off hot paths."""
    tiny = np.zeros((2, 1))
    accumulated_cost(tiny, tiny, open_begin=False)
    accumulated_cost(tiny, tiny, open_begin=True)
