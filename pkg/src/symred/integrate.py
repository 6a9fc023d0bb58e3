"""Fixed-step integrators for the reduced and full systems.

Vector-space components use classical RK4.  The group component is stepped
by exponential updates so that it stays on the group up to roundoff:

* ``lie_midpoint``: one exponential of the midpoint velocity (order 2),
* ``lie_rk4_corrected``: Runge-Kutta-Munthe-Kaas of order 4 with a single
  commutator correction,
* ``rk4``: plain RK4 on the matrix entries followed by re-projection when the
  constraint drifts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lie
from .errors import DriftError, InputError
from .reduction import FullState, InvariantSODE, ReducedState, group_velocity, reduced_rhs

log = logging.getLogger(__name__)

METHODS = ("rk4", "lie_midpoint", "lie_rk4_corrected")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step settings.

    When ``t_end`` is not a multiple of ``step`` the step is shrunk to
    ``t_end / ceil(t_end / step)`` so the grid always hits ``t_end``.
    """

    step: float
    t_end: float
    method: str = "lie_rk4_corrected"
    drift_tolerance: float = 1e-9

    def __post_init__(self):
        for name in ("step", "t_end", "drift_tolerance"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InputError(f"{name} must be a positive finite number, got {val!r}")
        if self.step > self.t_end:
            raise InputError(f"step {self.step} exceeds t_end {self.t_end}")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.step - 1e-9))

    @property
    def effective_step(self) -> float:
        return self.t_end / self.n_steps

    def grid(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.effective_step

    def with_step(self, step: float) -> "IntegratorConfig":
        return IntegratorConfig(step, self.t_end, self.method, self.drift_tolerance)


@dataclass(frozen=True, eq=False)
class ReducedTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> ReducedState:
        return ReducedState(self.x[k], self.v[k], self.w[k])


@dataclass(frozen=True, eq=False)
class FullTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    g: np.ndarray
    reprojections: int = 0
    max_drift: float = 0.0

    def __len__(self):
        return len(self.t)

    def reduced(self) -> ReducedTrajectory:
        return ReducedTrajectory(self.t, self.x, self.v, self.w)

    def state(self, k: int) -> FullState:
        return FullState(self.x[k], self.v[k], self.w[k], self.g[k])


def _splitter(n, m):
    def split(y):
        return y[:n], y[n:2 * n], y[2 * n:2 * n + m]
    return split


def _rk4_stages(f, y, h):
    k1 = f(y)
    y2 = y + 0.5 * h * k1
    k2 = f(y2)
    y3 = y + 0.5 * h * k2
    k3 = f(y3)
    y4 = y + h * k3
    k4 = f(y4)
    return (y, y2, y3, y4), (k1, k2, k3, k4)


def _reduced_field(sys: InvariantSODE):
    split = _splitter(sys.base_dim, sys.dim_algebra)

    def f(y):
        x, v, w = split(y)
        return np.concatenate(reduced_rhs(sys, ReducedState(x, v, w)))
    return f, split


def integrate_reduced(sys: InvariantSODE, s0: ReducedState, cfg: IntegratorConfig) -> ReducedTrajectory:
    """Classical RK4 on (x, v, w), sampled on the uniform grid of ``cfg``."""
    s0 = s0.validated(sys)
    f, split = _reduced_field(sys)
    h, N = cfg.effective_step, cfg.n_steps
    Y = np.empty((N + 1, 2 * sys.base_dim + sys.dim_algebra))
    Y[0] = np.concatenate([s0.x, s0.v, s0.w])
    for k in range(N):
        _, (k1, k2, k3, k4) = _rk4_stages(f, Y[k], h)
        Y[k + 1] = Y[k] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    n, m = sys.base_dim, sys.dim_algebra
    return ReducedTrajectory(cfg.grid(), Y[:, :n], Y[:, n:2 * n], Y[:, 2 * n:2 * n + m])


def integrate_full(sys: InvariantSODE, s0: FullState, cfg: IntegratorConfig) -> FullTrajectory:
    """Integrate (x, v, w, g); the vector part is RK4 for every method.

    The group velocity ``w - gamma(x) v`` never depends on g, so the RK4
    stages of the vector part also supply the group-step velocities.
    """
    s0 = s0.validated(sys)
    spec = sys.group
    f, split = _reduced_field(sys)
    h, N = cfg.effective_step, cfg.n_steps
    n, m = sys.base_dim, sys.dim_algebra
    Y = np.empty((N + 1, 2 * n + m))
    Y[0] = np.concatenate([s0.x, s0.v, s0.w])
    g = np.empty((N + 1,) + s0.g.shape)
    g[0] = s0.g
    reproj, max_drift = 0, lie.constraint_residual(spec, s0.g)

    def eta(y):
        return group_velocity(sys, *split(y))

    for k in range(N):
        stages, (k1, k2, k3, k4) = _rk4_stages(f, Y[k], h)
        Y[k + 1] = Y[k] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        e = [eta(s) for s in stages]
        gk = g[k]
        if cfg.method == "lie_midpoint":
            gn = lie.exponential(spec, 0.5 * h * (e[1] + e[2])) @ gk
        elif cfg.method == "lie_rk4_corrected":
            om = h / 6.0 * (e[0] + 2 * e[1] + 2 * e[2] + e[3])
            om -= h * h / 12.0 * lie.bracket(spec, e[0], e[3])
            gn = lie.exponential(spec, om) @ gk
        else:
            H = [lie.hat(spec, ei) for ei in e]
            q1 = H[0] @ gk
            q2 = H[1] @ (gk + 0.5 * h * q1)
            q3 = H[2] @ (gk + 0.5 * h * q2)
            q4 = H[3] @ (gk + h * q3)
            gn = gk + h / 6.0 * (q1 + 2 * q2 + 2 * q3 + q4)
        drift = lie.constraint_residual(spec, gn)
        max_drift = max(max_drift, drift)
        if drift > cfg.drift_tolerance:
            raise DriftError(f"group constraint residual {drift:.3g} exceeds drift tolerance "
                             f"{cfg.drift_tolerance:.3g} at t={(k + 1) * h:.6g}")
        if drift > cfg.drift_tolerance / 10:
            gn = lie.project_to_group(spec, gn)
            reproj += 1
        g[k + 1] = gn
    if reproj:
        log.info("re-projected group component %d times", reproj)
    return FullTrajectory(cfg.grid(), Y[:, :n], Y[:, n:2 * n], Y[:, 2 * n:], g, reproj, max_drift)


@dataclass(frozen=True)
class ConvergenceResult:
    order: float | None
    errors: tuple
    exact: bool = False
    inconclusive: bool = False


def convergence_order(run: Callable[[float], np.ndarray], step: float, reference=None,
                      floor: float = 1e-13) -> ConvergenceResult:
    """Observed order from runs at step, step/2 and step/4.

    ``run(h)`` returns an array sampled at times common to all three runs
    (e.g. the final state).  Without a ``reference`` the Richardson estimate
    ``log2(|y_h - y_h/2| / |y_h/2 - y_h/4|)`` is used, which tends to p for an
    order-p method.  With a reference the errors of the h and h/2 runs are
    compared directly.  Differences at roundoff level are flagged ``exact``;
    errors that do not shrink are flagged ``inconclusive``.
    """
    ys = [np.asarray(run(step / 2 ** j), dtype=float) for j in range(3)]
    scale = max(1.0, float(np.max(np.abs(ys[2]))))
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        errs = tuple(float(np.max(np.abs(y - ref))) for y in ys)
        e1, e2 = errs[0], errs[1]
    else:
        e1 = float(np.max(np.abs(ys[0] - ys[1])))
        e2 = float(np.max(np.abs(ys[1] - ys[2])))
        errs = (e1, e2)
    if max(e1, e2) <= floor * scale:
        return ConvergenceResult(None, errs, exact=True)
    if e2 <= 0 or e2 >= e1:
        return ConvergenceResult(None, errs, inconclusive=True)
    return ConvergenceResult(math.log2(e1 / e2), errs)
