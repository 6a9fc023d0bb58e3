"""Invariant second-order systems and their reduced dynamics.

A G-invariant SODE on U x G is fixed by two functions of the invariant
coordinates ``(x, v, w)``:

* ``D(x, v, w)``: base acceleration D^i,
* ``G(x, v, w)``: vertical forcing G^a in the mixed (body-fixed) basis.

Here ``v`` is the base velocity and ``w`` the body-fixed vertical velocity,
i.e. a tangent vector is ``v^i X_i + w^a E^_a``.  Neither function sees the
group element, which is how invariance is built in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import lie
from .bundle import ConnectionData, adjoint_connection_coeffs
from .errors import DriftError, InputError, NonFiniteError


@dataclass(frozen=True, eq=False)
class InvariantSODE:
    conn: ConnectionData
    D: Callable
    G: Callable

    @property
    def base_dim(self) -> int:
        return self.conn.base_dim

    @property
    def dim_algebra(self) -> int:
        return self.conn.group.dim_algebra

    @property
    def group(self) -> lie.LieGroupSpec:
        return self.conn.group


def _vec(a, n, label):
    a = np.asarray(a, dtype=float)
    if a.shape != (n,):
        raise InputError(f"{label} must have length {n}, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class ReducedState:
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def validated(self, sys: InvariantSODE) -> "ReducedState":
        return ReducedState(_vec(self.x, sys.base_dim, "x"),
                            _vec(self.v, sys.base_dim, "v"),
                            _vec(self.w, sys.dim_algebra, "w"))


@dataclass(frozen=True, eq=False)
class FullState:
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    g: np.ndarray = field(default=None)

    def reduced(self) -> ReducedState:
        return ReducedState(self.x, self.v, self.w)

    def validated(self, sys: InvariantSODE) -> "FullState":
        r = self.reduced().validated(sys)
        n = sys.group.matrix_size
        g = np.eye(n) if self.g is None else np.asarray(self.g, dtype=float)
        if g.shape != (n, n):
            raise InputError(f"g must be {n}x{n}, got {g.shape}")
        return FullState(r.x, r.v, r.w, g)


def _evaluate(sys: InvariantSODE, x, v, w):
    sys.conn.check_chart(x)
    D = np.asarray(sys.D(x, v, w), dtype=float)
    G = np.asarray(sys.G(x, v, w), dtype=float)
    if D.shape != (sys.base_dim,) or G.shape != (sys.dim_algebra,):
        raise InputError(f"D/G returned shapes {D.shape}/{G.shape}, expected "
                         f"({sys.base_dim},)/({sys.dim_algebra},)")
    if not (np.all(np.isfinite(D)) and np.all(np.isfinite(G))):
        raise NonFiniteError(f"non-finite dynamics at x={x.tolist()}, v={v.tolist()}, "
                             f"w={w.tolist()}")
    return D, G


def reduced_rhs(sys: InvariantSODE, s: ReducedState):
    """Time derivative (xdot, vdot, wdot) of the reduced coupled system.

    ``wdot^a = G^a - Upsilon^a_{ib} v^i w^b``: the body-fixed velocity obeys
    D^A w / Dt = G for the adjoint connection.
    """
    s = s.validated(sys)
    D, G = _evaluate(sys, s.x, s.v, s.w)
    U = adjoint_connection_coeffs(sys.conn, s.x)
    wdot = G - (s.v @ U) @ s.w
    return s.v.copy(), D, wdot


def group_velocity(sys: InvariantSODE, x, v, w) -> np.ndarray:
    """Right-trivialized group velocity gdot g^{-1} = w - gamma(x) v (components)."""
    return np.asarray(w, dtype=float) - np.asarray(v, dtype=float) @ sys.conn.gamma_at(x)


def full_rhs(sys: InvariantSODE, s: FullState, drift_tolerance: float | None = None):
    """Time derivative (xdot, vdot, gdot, wdot) on the full space."""
    s = s.validated(sys)
    if drift_tolerance is not None:
        drift = lie.constraint_residual(sys.group, s.g)
        if drift > drift_tolerance:
            raise DriftError(f"group constraint residual {drift:.3g} exceeds {drift_tolerance:.3g}")
    xdot, vdot, wdot = reduced_rhs(sys, s.reduced())
    eta = group_velocity(sys, s.x, s.v, s.w)
    return xdot, vdot, lie.hat(sys.group, eta) @ s.g, wdot


@dataclass(frozen=True, eq=False)
class FrameTangent:
    """Components of a tangent to TM in the standard basis.

    ``xc, ec, xv, ev`` multiply the complete lifts of X_i and of the moving
    frame, then the vertical lifts of X_i and of the moving frame.
    """

    xc: np.ndarray
    ec: np.ndarray
    xv: np.ndarray
    ev: np.ndarray

    def __add__(self, other: "FrameTangent") -> "FrameTangent":
        return FrameTangent(self.xc + other.xc, self.ec + other.ec,
                            self.xv + other.xv, self.ev + other.ev)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.xc, self.ec, self.xv, self.ev])


@dataclass(frozen=True, eq=False)
class Decomposition:
    horizontal: FrameTangent      # (v^i, D^i): the base second-order part
    vertical_lift: FrameTangent   # D^a on the vertical lifts of the moving frame
    connection_part: FrameTangent  # v^a on the complete lifts of the moving frame
    F: np.ndarray                 # body-frame acceleration, wdot^a
    A: np.ndarray                 # adjoint matrix of g

    def total(self) -> FrameTangent:
        return self.horizontal + self.vertical_lift + self.connection_part


def decompose(sys: InvariantSODE, s: FullState) -> Decomposition:
    """Split the SODE at ``s`` into its three invariant parts.

    With A = Ad_{g^{-1}} and its time derivative Adot along the flow,
    v^a = A w, F = G - A^{-1} Adot w and D^a = A F + Adot w.
    """
    s = s.validated(sys)
    spec = sys.group
    n, m = sys.base_dim, sys.dim_algebra
    D, G = _evaluate(sys, s.x, s.v, s.w)
    A = lie.adjoint_matrix(spec, s.g)
    eta = group_velocity(sys, s.x, s.v, s.w)
    Adot = -A @ lie.ad_matrix(spec, eta)
    F = G - np.linalg.solve(A, Adot @ s.w)
    Da = A @ F + Adot @ s.w
    zn, zm = np.zeros(n), np.zeros(m)
    return Decomposition(
        horizontal=FrameTangent(s.v.copy(), zm, D, zm),
        vertical_lift=FrameTangent(zn, zm, zn, Da),
        connection_part=FrameTangent(zn, A @ s.w, zn, zm),
        F=F, A=A,
    )


@dataclass(frozen=True)
class AuditReport:
    reduced_deviation: float     # max |(x, v, w) - (x', v', w')| over the run
    equivariance_deviation: float  # max |g(t) h - g'(t)|
    t_end: float


def invariance_audit(sys: InvariantSODE, s0: FullState, shift, cfg) -> AuditReport:
    """Integrate from g0 and from g0 h and compare the two runs.

    The reduced coordinates must not notice the shift and the group
    components must stay related by right multiplication with ``h``.
    """
    from .integrate import integrate_full

    s0 = s0.validated(sys)
    shift = np.asarray(shift, dtype=float)
    a = integrate_full(sys, s0, cfg)
    b = integrate_full(sys, FullState(s0.x, s0.v, s0.w, s0.g @ shift), cfg)
    red = max(float(np.max(np.abs(a.x - b.x))), float(np.max(np.abs(a.v - b.v))),
              float(np.max(np.abs(a.w - b.w))))
    eqv = float(np.max(np.abs(a.g @ shift - b.g)))
    return AuditReport(red, eqv, float(a.t[-1]))
