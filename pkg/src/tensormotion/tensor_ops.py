"""Dense multiway-array primitives used throughout the package.

Every routine here treats an ``np.ndarray`` of order ``K`` as a tensor
whose linearization is column-major: the first index varies fastest.
Unfoldings, vectorization and the Khatri-Rao product all follow from
that single convention, so factor matrices computed against an
unfolding can be folded back without bookkeeping surprises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CpFactors",
    "contracted_product",
    "cp_reconstruct",
    "frobenius_norm",
    "khatri_rao",
    "kronecker",
    "matricize",
    "refold",
    "vectorize",
]


def matricize(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Unfold a tensor along one mode.

    Parameters
    ----------
    tensor : np.ndarray
        Array of order >= 1.
    mode : int
        Mode to unfold along, 1-based.

    Returns
    -------
    np.ndarray
        Matrix of shape ``(I_mode, prod(I_other))``. Mode-``mode``
        fibers become columns; columns are ordered with the lowest
        remaining mode varying fastest.
    """
    tensor = np.asarray(tensor)
    if tensor.ndim < 1:
        raise ValueError("cannot matricize a scalar")
    if not 1 <= mode <= tensor.ndim:
        raise ValueError(
            f"mode {mode} out of range for an order-{tensor.ndim} tensor"
        )
    moved = np.moveaxis(tensor, mode - 1, 0)
    return moved.reshape((tensor.shape[mode - 1], -1), order="F")


def refold(matrix: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize` for a tensor of the given shape."""
    matrix = np.asarray(matrix)
    shape = tuple(int(s) for s in shape)
    if not 1 <= mode <= len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    expected = (shape[mode - 1], int(np.prod(shape)) // shape[mode - 1])
    if matrix.shape != expected:
        raise ValueError(
            f"matrix shape {matrix.shape} does not match unfolding {expected}"
        )
    moved_shape = (shape[mode - 1],) + shape[: mode - 1] + shape[mode:]
    tensor = matrix.reshape(moved_shape, order="F")
    return np.moveaxis(tensor, 0, mode - 1)


def vectorize(tensor: np.ndarray) -> np.ndarray:
    """Flatten a tensor with the first index varying fastest."""
    return np.asarray(tensor).reshape(-1, order="F")


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("kronecker expects two matrices")
    return np.kron(a, b)


def khatri_rao(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Column-wise Khatri-Rao product of a list of matrices.

    All inputs must share the same column count ``R``. The result has
    ``prod(rows)`` rows; the row index of the last matrix varies
    fastest, matching the column-major unfolding convention.
    """
    mats = [np.asarray(m) for m in matrices]
    if not mats:
        raise ValueError("khatri_rao needs at least one matrix")
    cols = {m.shape[1] for m in mats if m.ndim == 2}
    if any(m.ndim != 2 for m in mats) or len(cols) != 1:
        raise ValueError("khatri_rao expects matrices with a common column count")
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


def frobenius_norm(tensor: np.ndarray) -> float:
    """Frobenius norm of a tensor of any order."""
    return float(np.linalg.norm(np.asarray(tensor, dtype=float).ravel()))


def contracted_product(a: np.ndarray, b: np.ndarray, n_modes: int) -> np.ndarray:
    """Contract the last ``n_modes`` modes of ``a`` with the first
    ``n_modes`` modes of ``b``.

    For ``a`` of shape ``(*K, *P)`` and ``b`` of shape ``(*P, *Q)`` the
    result has shape ``(*K, *Q)``; entry ``[k, q]`` is the sum over all
    ``p`` of ``a[k, p] * b[p, q]``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if n_modes < 0:
        raise ValueError("n_modes must be non-negative")
    if n_modes > a.ndim or n_modes > b.ndim:
        raise ValueError(
            f"cannot contract {n_modes} modes of arrays with orders "
            f"{a.ndim} and {b.ndim}"
        )
    if n_modes and a.shape[a.ndim - n_modes:] != b.shape[:n_modes]:
        raise ValueError(
            f"contracted extents differ: {a.shape[a.ndim - n_modes:]} "
            f"vs {b.shape[:n_modes]}"
        )
    return np.tensordot(a, b, axes=n_modes)


@dataclass(frozen=True)
class CpFactors:
    """CP factorization of a coefficient tensor.

    ``input_factors[l]`` has shape ``(P_l, R)`` and ``output_factors[m]``
    has shape ``(Q_m, R)``; all matrices share the column count ``R``.
    The represented tensor is the sum over ``r`` of the outer product of
    the ``r``-th columns, with shape ``(*P, *Q)``.
    """

    input_factors: tuple[np.ndarray, ...]
    output_factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        ins = tuple(np.asarray(f, dtype=float) for f in self.input_factors)
        outs = tuple(np.asarray(f, dtype=float) for f in self.output_factors)
        object.__setattr__(self, "input_factors", ins)
        object.__setattr__(self, "output_factors", outs)
        all_f = ins + outs
        if not all_f:
            raise ValueError("CpFactors needs at least one factor matrix")
        for f in all_f:
            if f.ndim != 2:
                raise ValueError("factor matrices must be 2-D")
        ranks = {f.shape[1] for f in all_f}
        if len(ranks) != 1:
            raise ValueError(f"factor matrices disagree on rank: {sorted(ranks)}")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")

    @property
    def rank(self) -> int:
        return (self.input_factors + self.output_factors)[0].shape[1]

    @property
    def input_shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.input_factors)

    @property
    def output_shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.output_factors)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.input_shape + self.output_shape

    def norm(self) -> float:
        """Frobenius norm of the represented tensor, via Gram matrices."""
        gram = np.ones((self.rank, self.rank))
        for f in self.input_factors + self.output_factors:
            gram *= f.T @ f
        # clip: rounding can push the sum a hair below zero
        return float(np.sqrt(max(gram.sum(), 0.0)))


def cp_reconstruct(factors: CpFactors) -> np.ndarray:
    """Materialize the dense tensor represented by CP factors."""
    mats = list(factors.input_factors + factors.output_factors)
    # khatri_rao puts the last matrix's row index fastest, so feed the
    # factor list reversed to get a column-major vectorization
    vec = khatri_rao(list(reversed(mats))) @ np.ones(factors.rank)
    return vec.reshape(factors.shape, order="F")
