"""Recover full trajectories from reduced ones.

Pipeline: horizontal lift h(t) of the base curve, the algebra curve
xi = Ad_{h^{-1}} w, the group equation gdot g^{-1} = xi with g(0) = e, and
finally the group component h(t) g(t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lie
from .bundle import ConnectionData, connection_form
from .errors import InputError
from .integrate import FullTrajectory, ReducedTrajectory
from .numerics import central_derivative, hermite_mid_derivative, hermite_midpoints, uniform_step
from .reduction import FullState, InvariantSODE, ReducedState, reduced_rhs

GROUP_METHODS = ("lie_midpoint", "lie_rk4_corrected")


def _march(spec: lie.LieGroupSpec, a, a_mid, step: float, g0, method: str) -> np.ndarray:
    """Solve gdot g^{-1} = a(t) from node and midpoint samples of a."""
    if method == "rk4":
        method = "lie_rk4_corrected"
    if method not in GROUP_METHODS:
        raise InputError(f"group method must be one of {GROUP_METHODS}, got {method!r}")
    g0 = np.asarray(g0, dtype=float)
    out = np.empty((len(a),) + g0.shape)
    out[0] = g0
    for k in range(len(a) - 1):
        if method == "lie_midpoint":
            om = step * a_mid[k]
        else:
            # Simpson weights on the stages plus one commutator term; exact
            # for constant a and fourth order in general
            om = step / 6.0 * (a[k] + 4 * a_mid[k] + a[k + 1])
            om -= step * step / 12.0 * lie.bracket(spec, a[k], a[k + 1])
        out[k + 1] = lie.exponential(spec, om) @ out[k]
    return out


def horizontal_lift(conn: ConnectionData, t, x, xdot, h0, xddot=None,
                    method: str = "lie_rk4_corrected") -> np.ndarray:
    """Horizontal lift of the sampled base curve through h0.

    Solves hdot h^{-1} = -gamma(x) xdot.  Midpoint values of the base curve
    come from cubic Hermite interpolation; ``xddot`` (accelerations at the
    samples) sharpens the midpoint velocity when available.
    """
    step = uniform_step(t)
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    for xk in x:
        conn.check_chart(xk)
    a = -np.einsum("ki,kia->ka", xdot, np.array([conn.gamma_at(xk) for xk in x]))
    x_mid = hermite_midpoints(x, xdot, step)
    if xddot is None:
        xdot_mid = hermite_mid_derivative(x, xdot, step)
    else:
        xdot_mid = hermite_midpoints(xdot, xddot, step)
    a_mid = -np.array([vd @ conn.gamma_at(xm) for xm, vd in zip(x_mid, xdot_mid)])
    return _march(conn.group, a, a_mid, step, h0, method)


def xi_curve(conn: ConnectionData, w, h) -> np.ndarray:
    """xi(t) = Ad_{h(t)^{-1}} w(t) in basis components."""
    spec = conn.group
    return np.array([lie.adjoint_matrix(spec, hk) @ wk for wk, hk in zip(w, h)])


def solve_group_equation(spec: lie.LieGroupSpec, t, xi, g0, xi_dot=None,
                         method: str = "lie_rk4_corrected") -> np.ndarray:
    """Solve gdot g^{-1} = xi(t) on the grid of ``t`` with g(t0) = g0.

    Midpoint values of xi use cubic Hermite interpolation with ``xi_dot``;
    without it the derivative is estimated by second-order differences.
    """
    step = uniform_step(t)
    xi = np.asarray(xi, dtype=float)
    if xi_dot is None:
        xi_dot = np.gradient(xi, step, axis=0, edge_order=2) if len(xi) > 2 else \
            np.repeat((xi[1:] - xi[:-1]) / step, 2, axis=0)
    xi_mid = hermite_midpoints(xi, xi_dot, step)
    return _march(spec, xi, xi_mid, step, g0, method)


@dataclass(frozen=True, eq=False)
class Reconstruction:
    trajectory: FullTrajectory
    lift: np.ndarray       # h(t)
    xi: np.ndarray         # xi(t)
    group_curve: np.ndarray  # g(t) with g(0) = e


def _accelerations(sys: InvariantSODE, traj: ReducedTrajectory):
    D = np.empty_like(traj.x)
    G = np.empty_like(traj.w)
    for k in range(len(traj.t)):
        x, v, w = traj.x[k], traj.v[k], traj.w[k]
        D[k] = sys.D(x, v, w)
        G[k] = sys.G(x, v, w)
    return D, G


def reconstruct(sys: InvariantSODE, traj: ReducedTrajectory, s0: FullState,
                method: str = "lie_rk4_corrected", atol: float = 1e-12) -> Reconstruction:
    """Rebuild the full trajectory with group component h(t) g(t)."""
    s0 = s0.validated(sys)
    first = ReducedState(traj.x[0], traj.v[0], traj.w[0]).validated(sys)
    for name in ("x", "v", "w"):
        a, b = getattr(first, name), getattr(s0, name)
        if np.max(np.abs(a - b)) > atol * max(1.0, float(np.max(np.abs(a)))):
            raise InputError(f"initial state {name}={b.tolist()} does not match the reduced "
                             f"trajectory start {a.tolist()}")
    reduced_rhs(sys, first)  # surfaces dimension errors up front
    spec = sys.group
    D, G = _accelerations(sys, traj)
    h = horizontal_lift(sys.conn, traj.t, traj.x, traj.v, s0.g, xddot=D, method=method)
    xi = xi_curve(sys.conn, traj.w, h)
    # d/dt Ad_{h^{-1}} w = Ad_{h^{-1}} (wdot + Upsilon v w) = Ad_{h^{-1}} G
    xi_dot = np.array([lie.adjoint_matrix(spec, hk) @ Gk for hk, Gk in zip(h, G)])
    gc = solve_group_equation(spec, traj.t, xi, spec.identity, xi_dot=xi_dot, method=method)
    full = np.einsum("kij,kjl->kil", h, gc)
    drift = max(lie.constraint_residual(spec, gk) for gk in full)
    out = FullTrajectory(traj.t, traj.x, traj.v, traj.w, full, 0, drift)
    return Reconstruction(out, h, xi, gc)


def horizontality_residual(conn: ConnectionData, t, x, xdot, h) -> float:
    """Max |connection_form| along (x, h) with hdot from 4th-order differences."""
    step = uniform_step(t)
    sl, hdot = central_derivative(np.asarray(h), step, accuracy=4)
    xs, vs, hs = np.asarray(x)[sl], np.asarray(xdot)[sl], np.asarray(h)[sl]
    return max(float(np.max(np.abs(connection_form(conn, (xk, hk), (vk, hd)))))
               for xk, vk, hk, hd in zip(xs, vs, hs, hdot))
