"""Dominance, non-dominated filtering and the 2-objective hypervolume."""
from __future__ import annotations

import numpy as np


def dominates(a, b, maximize: bool = True) -> bool:
    """Strict Pareto dominance of a over b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if maximize:
        return bool(np.all(a >= b) and np.any(a > b))
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_indices(points, maximize: bool = True) -> list[int]:
    """Indices of the non-dominated points, ordered lexicographically by
    their objective values."""
    Y = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(Y)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        yi = Y[i]
        if maximize:
            dominated = np.all(Y >= yi, axis=1) & np.any(Y > yi, axis=1)
        else:
            dominated = np.all(Y <= yi, axis=1) & np.any(Y < yi, axis=1)
        if np.any(dominated & keep):
            keep[i] = False
    idx = [int(i) for i in np.flatnonzero(keep)]
    idx.sort(key=lambda i: tuple(Y[i]))
    return idx


def pareto_front(points, maximize: bool = True) -> np.ndarray:
    """The non-dominated subset, in deterministic lexicographic order."""
    Y = np.atleast_2d(np.asarray(points, dtype=float))
    return Y[non_dominated_indices(Y, maximize=maximize)]


def hypervolume_2d(front, reference, maximize: bool = True) -> float:
    """Area dominated by a 2-objective front up to the reference point.

    The reference must be dominated by (or equal to) every front point.
    """
    Y = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if Y.shape[1] != 2 or ref.shape != (2,):
        raise ValueError("hypervolume is implemented for exactly 2 objectives")
    if not maximize:
        Y = -Y
        ref = -ref
    if np.any(Y[:, 0] < ref[0]) or np.any(Y[:, 1] < ref[1]):
        raise ValueError("reference point must be dominated by all front points")
    order = np.argsort(-Y[:, 0])
    hv = 0.0
    top = ref[1]
    for i in order:
        x, y = Y[i]
        if y > top:
            hv += (x - ref[0]) * (y - top)
            top = y
    return float(hv)
