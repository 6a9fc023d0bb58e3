"""Small numerical helpers: finite differences and Hermite interpolation."""
from __future__ import annotations

import numpy as np

from .errors import InputError

FD_STEP = 1e-6
FD_STEP_SECOND = 1e-4


def jacobian_fd(f, x, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian; the differentiation axis is appended last."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        dx = np.zeros_like(x)
        dx[j] = step
        cols.append((np.asarray(f(x + dx)) - np.asarray(f(x - dx))) / (2 * step))
    return np.stack(cols, axis=-1)


def hermite_midpoints(y, dy, step: float) -> np.ndarray:
    """Cubic Hermite values halfway between consecutive samples."""
    y = np.asarray(y, dtype=float)
    dy = np.asarray(dy, dtype=float)
    return 0.5 * (y[:-1] + y[1:]) + 0.125 * step * (dy[:-1] - dy[1:])


def hermite_mid_derivative(y, dy, step: float) -> np.ndarray:
    """Derivative of the cubic Hermite interpolant halfway between samples."""
    y = np.asarray(y, dtype=float)
    dy = np.asarray(dy, dtype=float)
    return 1.5 * (y[1:] - y[:-1]) / step - 0.25 * (dy[:-1] + dy[1:])


def central_derivative(y, step: float, accuracy: int = 2):
    """Derivative on the interior of a uniform grid.

    Returns ``(slice, dy)`` where ``slice`` selects the interior samples.
    """
    y = np.asarray(y, dtype=float)
    if accuracy == 2:
        if len(y) < 3:
            raise InputError("need at least 3 samples for a centered difference")
        return slice(1, -1), (y[2:] - y[:-2]) / (2 * step)
    if accuracy == 4:
        if len(y) < 5:
            raise InputError("need at least 5 samples for a 4th-order difference")
        d = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * step)
        return slice(2, -2), d
    raise InputError(f"unsupported accuracy {accuracy}")


def uniform_step(t) -> float:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise InputError("time grid must be 1-d with at least 2 samples")
    dt = np.diff(t)
    h = (t[-1] - t[0]) / (len(t) - 1)
    if h <= 0 or np.max(np.abs(dt - h)) > 1e-9 * max(1.0, abs(t[-1])):
        raise InputError("time grid is not uniform")
    return float(h)
