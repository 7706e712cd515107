"""Shared test utilities: independent oracles and data builders.

The warping oracle enumerates every monotone step path through the cost
matrix, so it shares no code with the dynamic program it checks. Path
sets depend only on the matrix shape and are cached; per-instance
minima are then a gather plus segmented sums.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from tensormotion.kinematics import (
    SPACE_CARTESIAN,
    MotionSequence,
    Skeleton,
    default_skeleton,
)


@lru_cache(maxsize=None)
def _paths(n_q: int, n_r: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All monotone paths from (0, 0) to (n_q-1, n_r-1)."""
    if n_q == 1 and n_r == 1:
        return (((0, 0),),)
    found = []
    if n_q > 1:
        for p in _paths(n_q - 1, n_r):
            found.append(p + ((n_q - 1, n_r - 1),))
    if n_r > 1:
        for p in _paths(n_q, n_r - 1):
            found.append(p + ((n_q - 1, n_r - 1),))
    if n_q > 1 and n_r > 1:
        for p in _paths(n_q - 1, n_r - 1):
            found.append(p + ((n_q - 1, n_r - 1),))
    return tuple(found)


@lru_cache(maxsize=None)
def _path_indexer(n_q: int, n_r: int) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated flat cell indices of every path plus segment starts."""
    paths = _paths(n_q, n_r)
    flat = np.array(
        [i * n_r + j for p in paths for i, j in p], dtype=np.int64
    )
    starts = np.cumsum([0] + [len(p) for p in paths[:-1]])
    return flat, np.asarray(starts, dtype=np.int64)


def brute_closed(cost: np.ndarray) -> float:
    """Minimum path sum by exhaustive enumeration (both ends pinned)."""
    n_q, n_r = cost.shape
    flat, starts = _path_indexer(n_q, n_r)
    sums = np.add.reduceat(cost.ravel()[flat], starts)
    return float(sums.min())


def brute_open_end(cost: np.ndarray) -> tuple[float, int]:
    """Exhaustive open-end minimum and its matched column (smallest on ties)."""
    best, best_j = np.inf, -1
    for j in range(cost.shape[1]):
        d = brute_closed(cost[:, : j + 1])
        if d < best:
            best, best_j = d, j
    return best, best_j


def brute_distance(
    query: np.ndarray,
    reference: np.ndarray,
    open_begin: bool = False,
    open_end: bool = False,
) -> float:
    """Exhaustive warping distance for any endpoint combination."""
    q = np.atleast_2d(np.asarray(query, dtype=float).T).T
    r = np.atleast_2d(np.asarray(reference, dtype=float).T).T
    cost = np.sqrt(
        ((q[:, None, :] - r[None, :, :]) ** 2).sum(axis=2)
    )
    starts = range(cost.shape[1]) if open_begin else [0]
    best = np.inf
    for j0 in starts:
        sub = cost[:, j0:]
        if open_end:
            d, _ = brute_open_end(sub)
        else:
            d = brute_closed(sub)
        best = min(best, d)
    return float(best)


def random_tree_motion(
    rng: np.random.Generator,
    n_frames: int,
    skeleton: Skeleton | None = None,
    frame_rate: float = 60.0,
) -> MotionSequence:
    """Random Cartesian motion that respects a skeleton's tree topology.

    Each child sits at its parent plus a random offset with norm in
    [0.2, 1.5] meters, so no frame has coincident joints.
    """
    skeleton = skeleton or default_skeleton()
    col = {j: i for i, j in enumerate(skeleton.joints)}
    coords = np.empty((n_frames, len(skeleton.joints), 3))
    coords[:, col[skeleton.root]] = rng.uniform(-1.0, 1.0, (n_frames, 3))
    for joint in skeleton.topological_joints:
        if joint == skeleton.root:
            continue
        direction = rng.standard_normal((n_frames, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.uniform(0.2, 1.5, (n_frames, 1))
        coords[:, col[joint]] = (
            coords[:, col[skeleton.parents[joint]]] + radius * direction
        )
    return MotionSequence(
        frames=coords,
        frame_rate=frame_rate,
        space=SPACE_CARTESIAN,
        joint_names=skeleton.joints,
    )


def valid_warp_path(path: np.ndarray, n_q: int, n_r: int, open_begin: bool) -> bool:
    """Structural checks: start, end, and unit monotone steps."""
    if path[0, 0] != 0 or (not open_begin and path[0, 1] != 0):
        return False
    if path[-1, 0] != n_q - 1 or not 0 <= path[-1, 1] < n_r:
        return False
    steps = np.diff(path, axis=0)
    allowed = {(0, 1), (1, 0), (1, 1)}
    return all((int(a), int(b)) in allowed for a, b in steps)
