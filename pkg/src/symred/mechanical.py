"""Invariant metrics of Kaluza-Klein type and their reduced geodesic flow.

The metric is block diagonal in the frame (X_i, E^_a):
k(X_i, X_j) = kbar_ij(x), k(E^_a, E^_b) = k_ab(x), k(X_i, E^_a) = 0.
Both blocks depend on x only, which is what G-invariance means here.

Index conventions for Christoffel blocks: arrays are indexed
``[upper, lower1, lower2]`` and the first lower index is the direction,
nabla_{e_b} e_c = Gamma^a_{bc} e_a.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import lie
from .bundle import (ChartDomain, ConnectionData, adjoint_connection_coeffs,
                     curvature, flat_connection)
from .errors import DecompositionError, InputError
from .fields import make_field, make_state_map
from .integrate import IntegratorConfig
from .numerics import FD_STEP, jacobian_fd
from .reduction import FullState, InvariantSODE

SYM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InvariantMetric:
    k_base: Callable
    k_vert: Callable
    conn: ConnectionData
    k_base_jacobian: Callable | None = None
    k_vert_jacobian: Callable | None = None
    _factors: dict = field(default_factory=dict, init=False, repr=False)

    def factor(self, K, label):
        # constant blocks recur at every evaluation, so keep the last factor
        key = (label, K.tobytes())
        fac = self._factors.get(label)
        if fac is None or fac[0] != key:
            fac = (key, _factor(K, label))
            self._factors[label] = fac
        return fac[1]

    @property
    def base_dim(self) -> int:
        return self.conn.base_dim

    @property
    def dim_algebra(self) -> int:
        return self.conn.group.dim_algebra

    def base_at(self, x) -> np.ndarray:
        return _block(self.k_base, x, self.base_dim, "k_base")

    def vert_at(self, x) -> np.ndarray:
        return _block(self.k_vert, x, self.dim_algebra, "k_vert")

    def base_jacobian(self, x) -> np.ndarray:
        if self.k_base_jacobian is not None:
            return np.asarray(self.k_base_jacobian(x), dtype=float)
        return jacobian_fd(self.base_at, x, FD_STEP)

    def vert_jacobian(self, x) -> np.ndarray:
        if self.k_vert_jacobian is not None:
            return np.asarray(self.k_vert_jacobian(x), dtype=float)
        return jacobian_fd(self.vert_at, x, FD_STEP)


def _block(f, x, n, label):
    K = np.asarray(f(np.asarray(x, dtype=float)), dtype=float).reshape(-1)
    if K.size == 1 and n == 1:
        return K.reshape(1, 1)
    if K.size != n * n:
        raise InputError(f"{label}(x) must be {n}x{n}")
    return K.reshape(n, n)


def _factor(K, label):
    if not np.all(np.isfinite(K)):
        raise DecompositionError(f"{label} has non-finite entries")
    if np.max(np.abs(K - K.T)) > SYM_TOL * max(1.0, float(np.max(np.abs(K)))):
        raise DecompositionError(f"{label} is not symmetric")
    try:
        return cho_factor(K, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise DecompositionError(f"{label} is not positive definite: {exc}") from None


def _raise(fac, arr):
    """Contract the first index of ``arr`` with the inverse metric."""
    return cho_solve(fac, arr.reshape(arr.shape[0], -1), check_finite=False).reshape(arr.shape)


@dataclass(frozen=True, eq=False)
class ForceField:
    phi_base: Callable
    phi_vert: Callable


def zero_force(base_dim: int, dim_algebra: int) -> ForceField:
    return ForceField(lambda x, v, w: np.zeros(base_dim), lambda x, v, w: np.zeros(dim_algebra))


class _Local:
    """Everything the formulas need at one base point, computed on demand."""

    def __init__(self, metric: InvariantMetric, x):
        self.metric = metric
        self.x = np.asarray(x, dtype=float)
        metric.conn.check_chart(self.x)
        self.C = metric.conn.group.structure_constants

    @cached_property
    def kb(self):
        return self.metric.base_at(self.x)

    @cached_property
    def kv(self):
        return self.metric.vert_at(self.x)

    @cached_property
    def fb(self):
        return self.metric.factor(self.kb, "k_base")

    @cached_property
    def fv(self):
        return self.metric.factor(self.kv, "k_vert")

    @cached_property
    def dkb(self):  # [i, j, l] = d_l kbar_ij
        return self.metric.base_jacobian(self.x)

    @cached_property
    def dkv(self):  # [a, b, j] = d_j k_ab
        return self.metric.vert_jacobian(self.x)

    @cached_property
    def K(self):
        return curvature(self.metric.conn, self.x)

    @cached_property
    def P(self):  # [b, c, j] = k_bd Upsilon^d_{jc}
        U = adjoint_connection_coeffs(self.metric.conn, self.x)
        return np.einsum("bd,djc->bcj", self.kv, U)

    def base_christoffel(self):
        d = self.dkb
        low = d.transpose(0, 2, 1) + d - d.transpose(2, 0, 1)  # [l, j, k]
        return 0.5 * _raise(self.fb, low)


@dataclass(frozen=True, eq=False)
class ChristoffelTable:
    bcA: np.ndarray  # Gamma^a_{bc}
    bcI: np.ndarray  # Gamma^i_{bc}
    jbA: np.ndarray  # Gamma^a_{jb}
    bjA: np.ndarray  # Gamma^a_{bj}
    jbI: np.ndarray  # Gamma^i_{jb} = Gamma^i_{bj}
    jkA: np.ndarray  # Gamma^a_{jk}
    jkI: np.ndarray  # Gamma^i_{jk}, Christoffel symbols of kbar

    def frame_array(self) -> np.ndarray:
        """Gamma[g, a, b] over the frame (X_1..X_n, E^_1..E^_m)."""
        n, m = self.jkI.shape[0], self.bcA.shape[0]
        G = np.zeros((n + m,) * 3)
        G[n:, n:, n:] = self.bcA
        G[:n, n:, n:] = self.bcI
        G[n:, :n, n:] = self.jbA
        G[n:, n:, :n] = self.bjA
        G[:n, :n, n:] = self.jbI
        G[:n, n:, :n] = self.jbI.transpose(0, 2, 1)
        G[n:, :n, :n] = self.jkA
        G[:n, :n, :n] = self.jkI
        return G


def christoffel_table(metric: InvariantMetric, x) -> ChristoffelTable:
    """Levi-Civita coefficients of the invariant metric in the frame (X_i, E^_a)."""
    L = _Local(metric, x)
    C, kv, P, T = L.C, L.kv, L.P, L.dkv
    Pt = P.transpose(1, 0, 2)  # k_cd Upsilon^d_{jb} at [b, c, j]
    kC = np.einsum("be,ecd->dbc", kv, C)  # [d, b, c] = k_be C^e_{cd}
    bcA = 0.5 * (-C + _raise(L.fv, kC + kC.transpose(0, 2, 1)))
    bcI = 0.5 * _raise(L.fb, (-T + P + Pt).transpose(2, 0, 1))
    jbA = 0.5 * _raise(L.fv, (T - P + Pt).transpose(1, 2, 0))
    bjA = 0.5 * _raise(L.fv, (T - P - Pt).transpose(1, 0, 2))
    jbI = -0.5 * _raise(L.fb, np.einsum("bc,cjk->kjb", kv, L.K))
    return ChristoffelTable(bcA, bcI, jbA, bjA, jbI, 0.5 * L.K, L.base_christoffel())


def mechanical_sode(metric: InvariantMetric, force: ForceField) -> InvariantSODE:
    """Reduced geodesic equations with force.

    D^i = -Gbar^i_jk v^j v^k + Phi^i + k^ik v^j w^b k_bc K^c_jk
          + k^ij w^b w^c (1/2 d_j k_bc - k_bd Upsilon^d_jc)
    G^a = Phi^a - k^ac v^j w^b (d_j k_bc - k_bd Upsilon^d_jc - k_cd Upsilon^d_jb)
          + k^ad w^b w^c k_be C^e_dc
    """

    cache = {}

    def local(x):
        # D and G are evaluated back to back at the same x
        key = np.asarray(x, dtype=float).tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = _Local(metric, x)
        return cache[key]

    def D(x, v, w):
        L = local(x)
        # lowered -Gbar_ljk v^j v^k = -(d_j k_lk v^j v^k - 1/2 d_l k_jk v^j v^k)
        dv = L.dkb @ v                      # [l, k] = d_j k_lk v^j
        low = -(dv @ v) + 0.5 * (v @ (v @ L.dkb))
        low += (w @ L.kv) @ (v @ L.K)       # k_bc w^b v^j K^c_jk
        low += w @ (w @ (0.5 * L.dkv - L.P))
        return _raise(L.fb, low) + np.asarray(force.phi_base(x, v, w), dtype=float)

    def G(x, v, w):
        L = local(x)
        S = L.dkv - L.P - L.P.transpose(1, 0, 2)
        low = -(w @ (S @ v))
        low += (w @ L.kv) @ (L.C @ w)       # k_be w^b C^e_dc w^c
        return _raise(L.fv, low) + np.asarray(force.phi_vert(x, v, w), dtype=float)

    return InvariantSODE(metric.conn, D, G)


def gyroscopic_tensor(metric: InvariantMetric, x) -> np.ndarray:
    """C[j, i] = C^j_i = |E|^2 kbar^jk K_ik for a one-dimensional group.

    The reduced base equation carries the term w C^i_j v^j, and the lowered
    form kbar @ C is skew.
    """
    if metric.dim_algebra != 1:
        raise InputError(f"gyroscopic tensor needs a 1-d group, got dimension {metric.dim_algebra}")
    L = _Local(metric, x)
    return L.kv[0, 0] * _raise(L.fb, L.K[0].T.copy())


def kinetic_energy(metric: InvariantMetric, x, v, w) -> float:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return 0.5 * float(v @ metric.base_at(x) @ v + w @ metric.vert_at(x) @ w)


def bi_invariance_residual(spec: lie.LieGroupSpec, k) -> float:
    """max |k_ad C^d_bc + k_bd C^d_ac|; zero iff k is Ad-invariant."""
    k = np.asarray(k, dtype=float)
    t = np.einsum("ad,dbc->abc", k, spec.structure_constants)
    return float(np.max(np.abs(t + t.transpose(1, 0, 2))))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    system: InvariantSODE
    initial: FullState
    integrator: IntegratorConfig
    metric: InvariantMetric | None = None
    force: ForceField | None = None
    params: dict = field(default_factory=dict)

    @property
    def group(self) -> lie.LieGroupSpec:
        return self.system.group


def _param_vec(params, key, default, n):
    val = np.array(params.get(key, default), dtype=float).reshape(-1)
    if val.shape != (n,):
        raise InputError(f"params.{key}: expected {n} components, got {val.size}")
    return val


def _domain(params, n):
    dom = params.get("domain")
    if dom is None:
        return None
    lo = _param_vec(dom, "lower", None, n)
    hi = _param_vec(dom, "upper", None, n)
    return ChartDomain(tuple(lo), tuple(hi))


def _finish(name, metric, force, params, n, m, x0, v0, w0, step, t_end):
    sys = mechanical_sode(metric, force)
    g0 = np.array(params.get("g0", np.eye(metric.conn.group.matrix_size)), dtype=float)
    init = FullState(_param_vec(params, "x0", x0, n), _param_vec(params, "v0", v0, n),
                     _param_vec(params, "w0", w0, m), g0).validated(sys)
    cfg = IntegratorConfig(float(params.get("step", step)), float(params.get("t_end", t_end)),
                           params.get("method", "lie_rk4_corrected"),
                           float(params.get("drift_tolerance", 1e-9)))
    return Scenario(name, sys, init, cfg, metric, force, dict(params))


def _scalar_block(f, jac, n):
    kv = lambda x: np.asarray(f(x), dtype=float).reshape(1, 1)
    if jac is None:
        return kv, None
    return kv, lambda x: np.asarray(jac(x), dtype=float).reshape(1, 1, n)


def _u1_connection(params, n, where="A"):
    spec = params.get(where)
    if spec is None:
        spec = {"kind": "uniform_magnetic", "B": params.get("B", [0.0, 0.0, 1.0] if n == 3 else 1.0)}
    A, dA = make_field(spec, n, f"params.{where}")
    gam = lambda x: np.asarray(A(x), dtype=float).reshape(n, 1)
    jac = None if dA is None else (lambda x: np.asarray(dA(x), dtype=float).reshape(n, 1, n))
    return ConnectionData(lie.u1(), n, gam, jac, _domain(params, n))


def _magnetic(params):
    n = int(params.get("base_dim", 3))
    conn = _u1_connection(params, n)
    eye = np.eye(n)
    metric = InvariantMetric(lambda x: eye, lambda x: np.ones((1, 1)), conn,
                             lambda x: np.zeros((n, n, n)), lambda x: np.zeros((1, 1, n)))
    return _finish("magnetic_particle", metric, zero_force(n, 1), params, n, 1,
                   np.zeros(n), np.eye(n)[0], [1.0], 1e-3, 2 * np.pi)


def _bullo_lewis(params):
    n = int(params.get("base_dim", 3))
    conn = _u1_connection(params, n)
    e2 = params.get("E2", {"kind": "gaussian_bump", "base": 1.0, "amplitude": 0.5, "width": 1.0})
    kv, dkv = _scalar_block(*make_field(e2, n, "params.E2"), n)
    kb_spec = params.get("k_base", {"kind": "constant", "value": np.eye(n).tolist()})
    kb, dkb = make_field(kb_spec, n, "params.k_base")
    force = ForceField(make_state_map(params.get("phi_base"), n, 1, n, "params.phi_base"),
                       make_state_map(params.get("phi_vert"), n, 1, 1, "params.phi_vert"))
    metric = InvariantMetric(kb, kv, conn, dkb, dkv)
    x0 = np.zeros(n)
    x0[0] = 0.5
    v0 = np.full(n, 0.2)
    v0[0] = 0.0
    return _finish("bullo_lewis", metric, force, params, n, 1, x0, v0, [0.8], 1e-3, 10.0)


def _wong_gamma(n):
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k], eps[j, i, k] = 1.0, -1.0
    slope = np.zeros((n, 3, n))
    for i in range(min(n, 3)):
        for j in range(min(n, 3)):
            slope[i, :, j] = 0.5 * eps[i, j, :]
    value = 0.3 * np.eye(n, 3)
    return {"kind": "affine", "value": value.tolist(), "slope": slope.tolist()}


def _wong(params):
    n = int(params.get("base_dim", 3))
    spec = lie.so3()
    gspec = params.get("gamma", _wong_gamma(n))
    gam, dgam = make_field(gspec, n, "params.gamma")
    conn = ConnectionData(spec, n, gam, dgam, _domain(params, n))
    kv = np.array(params.get("k_vert", np.eye(3)), dtype=float)
    if kv.ndim == 0:
        kv = float(kv) * np.eye(3)
    if kv.shape != (3, 3):
        raise InputError("params.k_vert: expected a scalar or a 3x3 matrix")
    res = bi_invariance_residual(spec, kv)
    if res > 1e-12 * max(1.0, float(np.max(np.abs(kv)))):
        raise InputError(f"params.k_vert is not bi-invariant (residual {res:.3g})")
    kb_spec = params.get("k_base", {"kind": "constant", "value": np.eye(n).tolist()})
    kb, dkb = make_field(kb_spec, n, "params.k_base")
    metric = InvariantMetric(kb, lambda x: kv, conn, dkb, lambda x: np.zeros((3, 3, n)))
    v0 = np.resize([0.3, -0.2, 0.1], n)
    return _finish("wong", metric, zero_force(n, 3), params, n, 3,
                   np.zeros(n), v0, [0.5, -0.4, 0.8], 1e-3, 5.0)


def _free(params):
    n = int(params.get("base_dim", 3))
    spec = lie.builtin_group(params.get("group", "so3"))
    m = spec.dim_algebra
    conn = flat_connection(spec, n, _domain(params, n))
    kvm = np.array(params.get("k_vert", np.eye(m)), dtype=float)
    if kvm.shape != (m, m):
        raise InputError(f"params.k_vert: expected a {m}x{m} matrix")
    eye = np.eye(n)
    metric = InvariantMetric(lambda x: eye, lambda x: kvm, conn,
                             lambda x: np.zeros((n, n, n)), lambda x: np.zeros((m, m, n)))
    v0 = 0.1 * np.arange(1, n + 1)
    w0 = np.resize([0.3, -0.5, 0.7], m)
    return _finish("free_invariant", metric, zero_force(n, m), params, n, m,
                   np.zeros(n), v0, w0, 1e-3, 5.0)


SCENARIOS = {
    "magnetic_particle": _magnetic,
    "bullo_lewis": _bullo_lewis,
    "wong": _wong,
    "free_invariant": _free,
}


def scenario_library(name: str, params: dict | None = None) -> Scenario:
    if name not in SCENARIOS:
        raise InputError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    return SCENARIOS[name](dict(params or {}))


def diagnostics(scn: Scenario, traj) -> dict:
    """Conserved-quantity drifts along a reduced or full trajectory."""
    out = {"w_drift": float(np.max(np.abs(traj.w - traj.w[0])))}
    if scn.metric is not None:
        E = np.array([kinetic_energy(scn.metric, x, v, w)
                      for x, v, w in zip(traj.x, traj.v, traj.w)])
        out["energy_initial"] = float(E[0])
        out["energy_relative_drift"] = float(np.max(np.abs(E - E[0])) / max(abs(E[0]), 1e-300))
        if scn.metric.dim_algebra == 1:
            mu = np.array([scn.metric.vert_at(x)[0, 0] * w[0] for x, w in zip(traj.x, traj.w)])
            out["mu_drift"] = float(np.max(np.abs(mu - mu[0])))
    out["speed_drift"] = float(np.max(np.abs(np.linalg.norm(traj.v, axis=1)
                                             - np.linalg.norm(traj.v[0]))))
    return out
