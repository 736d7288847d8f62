"""Łukasiewicz paths, height sequences and the future-infimum transform.

A path is a 1-D int64 array of values ``S(0..L)`` with ``S(0) = 0`` and
increments ``>= -1``. The height sequence of a path has one entry per
visited vertex, i.e. ``L`` entries.
"""
from __future__ import annotations

import io

import numpy as np
from numba import njit

_INT64_MAX = np.iinfo(np.int64).max


def lukasiewicz_from_degrees(degrees) -> np.ndarray:
    """Path with steps ``degree - 1`` over vertices listed in depth-first order."""
    d = np.asarray(degrees, dtype=np.int64).reshape(-1)
    if d.size and d.min() < 0:
        raise ValueError("degrees must be nonnegative")
    return path_from_steps(d - 1)


def path_from_steps(steps) -> np.ndarray:
    """Partial sums ``S(0)=0, S(k)=sum_{i<k} steps[i]`` with an overflow check."""
    st = np.asarray(steps, dtype=np.int64).reshape(-1)
    if st.size and st.min() < -1:
        raise ValueError("path steps must be >= -1 (downward skip-free)")
    if st.size and int(np.abs(st).max()) > _INT64_MAX // max(st.size, 1):
        raise OverflowError("path values could exceed the int64 range")
    out = np.zeros(st.size + 1, dtype=np.int64)
    np.cumsum(st, out=out[1:])
    return out


def steps_of(path) -> np.ndarray:
    return np.diff(np.asarray(path, dtype=np.int64))


def degrees_of(path) -> np.ndarray:
    """Inverse of :func:`lukasiewicz_from_degrees`."""
    return steps_of(path) + 1


def validate_path(path) -> np.ndarray:
    s = np.asarray(path, dtype=np.int64).reshape(-1)
    if s.size == 0:
        raise ValueError("empty path")
    if s[0] != 0:
        raise ValueError("path must start at 0")
    if s.size > 1 and np.diff(s).min() < -1:
        raise ValueError("path is not downward skip-free")
    return s


@njit(cache=True)
def _heights(x):
    # h(i) = #{j < i : x(j) = min x[j..i]}. The stack holds the indices j < i
    # that are weak running minima of x[j..i]; pushing i and popping every j
    # with x(j) > x(i+1) updates it for i+1.
    n = x.shape[0] - 1
    h = np.zeros(max(n, 0), dtype=np.int64)
    if n <= 0:
        return h
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n - 1):
        stack[top] = i
        top += 1
        v = x[i + 1]
        while top > 0 and x[stack[top - 1]] > v:
            top -= 1
        h[i + 1] = top
    return h


def height_process(path) -> np.ndarray:
    """Height of every visited vertex, ``len(path) - 1`` entries, O(length)."""
    x = np.ascontiguousarray(path, dtype=np.int64).reshape(-1)
    if x.size == 0:
        raise ValueError("height_process needs a nonempty path")
    return _heights(x)


def height_process_naive(path) -> np.ndarray:
    """Quadratic evaluation of the height formula, kept as a test oracle."""
    x = np.asarray(path, dtype=np.int64).reshape(-1)
    out = np.zeros(max(x.size - 1, 0), dtype=np.int64)
    for i in range(1, x.size - 1):
        # window_min[j] = min x[j..i]
        window_min = np.minimum.accumulate(x[i::-1])[::-1]
        out[i] = int(np.count_nonzero(x[:i] == window_min[:i]))
    return out


def future_infimum(path) -> np.ndarray:
    """``min{X(m) : m >= k}`` over the finite window."""
    x = np.asarray(path, dtype=np.int64).reshape(-1)
    return np.minimum.accumulate(x[::-1])[::-1]


def future_infimum_transform(path) -> np.ndarray:
    """``X - min_{m>=k} X(m)``: nonnegative, ends at 0, same heights as ``X``."""
    x = np.asarray(path, dtype=np.int64).reshape(-1)
    return x - future_infimum(x)


def tree_starts(path) -> np.ndarray:
    """Indices where a new tree starts: 0 and every strict new running minimum."""
    x = np.asarray(path, dtype=np.int64).reshape(-1)
    if x.size < 2:
        return np.zeros(min(x.size, 1), dtype=np.int64)
    prev_min = np.minimum.accumulate(x)[:-1]
    idx = np.flatnonzero(x[1:-1] < prev_min[:-1]) + 1
    return np.concatenate(([0], idx)).astype(np.int64)


def path_to_csv(path, heights=None) -> str:
    """CSV text with columns ``index,S,H`` (``H`` empty at the final index)."""
    s = np.asarray(path, dtype=np.int64)
    h = height_process(s) if heights is None else np.asarray(heights)
    buf = io.StringIO()
    buf.write("index,S,H\n")
    for i, v in enumerate(s):
        hv = str(int(h[i])) if i < h.size else ""
        buf.write(f"{i},{int(v)},{hv}\n")
    return buf.getvalue()
