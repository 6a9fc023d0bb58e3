"""Principal connections on the trivialized bundle U x G.

Points are ``(x, g)`` with ``g`` a group matrix and the group acting on the
right, ``(x, h) . g = (x, h g)``.  With this convention

* the fundamental field of ``xi`` is ``(0, g xi)`` (left translates),
* the body-fixed frame is ``E_a g`` (right translates, G-invariant),
* the horizontal frame is ``X_i = d/dx^i - gamma_i^a(x) E_a g``,

and a tangent ``(xdot, gdot)`` is horizontal iff
``gdot g^{-1} = -gamma_i^a xdot^i E_a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import lie
from .errors import ChartExitError, InputError
from .lie import LieGroupSpec
from .numerics import FD_STEP, central_derivative, jacobian_fd, uniform_step


@dataclass(frozen=True)
class ChartDomain:
    """Axis-aligned box in base coordinates."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))

    @classmethod
    def unbounded(cls, dim: int) -> "ChartDomain":
        return cls((-np.inf,) * dim, (np.inf,) * dim)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


class BundlePoint(NamedTuple):
    x: np.ndarray
    g: np.ndarray


@dataclass(frozen=True, eq=False)
class ConnectionData:
    """Coefficients gamma_i^a(x) of a principal connection.

    ``gamma(x)`` returns a ``(base_dim, dim_algebra)`` array.  The optional
    ``gamma_jacobian(x)`` returns ``[i, a, j] = d gamma_i^a / d x^j``; it is
    finite-differenced when omitted.
    """

    group: LieGroupSpec
    base_dim: int
    gamma: Callable
    gamma_jacobian: Callable | None = None
    domain: ChartDomain | None = None

    def gamma_at(self, x) -> np.ndarray:
        out = np.asarray(self.gamma(np.asarray(x, dtype=float)), dtype=float)
        shape = (self.base_dim, self.group.dim_algebra)
        if out.shape != shape:
            raise InputError(f"gamma(x) must have shape {shape}, got {out.shape}")
        return out

    def jacobian_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gamma_jacobian is not None:
            return np.asarray(self.gamma_jacobian(x), dtype=float)
        return jacobian_fd(self.gamma_at, x, FD_STEP)

    def check_chart(self, x) -> None:
        if self.domain is not None and not self.domain.contains(x):
            raise ChartExitError(f"base point {np.asarray(x).tolist()} left the chart domain "
                                 f"[{list(self.domain.lower)}, {list(self.domain.upper)}]")


def flat_connection(group: LieGroupSpec, base_dim: int, domain=None) -> ConnectionData:
    m = group.dim_algebra
    return ConnectionData(group, base_dim, lambda x: np.zeros((base_dim, m)),
                          lambda x: np.zeros((base_dim, m, base_dim)), domain)


def constant_connection(group: LieGroupSpec, value, domain=None) -> ConnectionData:
    value = np.array(value, dtype=float)
    n, m = value.shape
    return ConnectionData(group, n, lambda x: value,
                          lambda x: np.zeros((n, m, n)), domain)


def _point(p) -> BundlePoint:
    x, g = p
    return BundlePoint(np.asarray(x, dtype=float), np.asarray(g, dtype=float))


def fundamental_field(conn: ConnectionData, xi, p):
    """Generator of t -> (x, g exp(t xi)) at p, as a tangent (xdot, gdot)."""
    x, g = _point(p)
    return np.zeros_like(x), g @ lie.hat(conn.group, xi)


def body_frame_field(conn: ConnectionData, a: int, p):
    """Invariant vertical frame vector E^_a at p."""
    x, g = _point(p)
    return np.zeros_like(x), conn.group.basis[a] @ g


def horizontal_frame_field(conn: ConnectionData, i: int, p):
    """Horizontal frame vector X_i at p."""
    x, g = _point(p)
    e = np.zeros(conn.base_dim)
    e[i] = 1.0
    return e, horizontal_rhs(conn, (x, g), e)


def connection_form(conn: ConnectionData, p, tangent) -> np.ndarray:
    """Algebra-valued connection form: g^{-1} gdot + Ad_{g^{-1}}(gamma(x) xdot)."""
    x, g = _point(p)
    xdot, gdot = tangent
    spec = conn.group
    left = lie.vee(spec, np.linalg.solve(g, np.asarray(gdot, dtype=float)))
    gx = np.asarray(xdot, dtype=float) @ conn.gamma_at(x)
    return left + lie.adjoint_matrix(spec, g) @ gx


def horizontal_rhs(conn: ConnectionData, p, xdot) -> np.ndarray:
    """The group velocity making (xdot, gdot) horizontal."""
    x, g = _point(p)
    a = np.asarray(xdot, dtype=float) @ conn.gamma_at(x)
    return -lie.hat(conn.group, a) @ g


def curvature(conn: ConnectionData, x) -> np.ndarray:
    """K[a, i, j] with [X_i, X_j] = K^a_{ij} E^_a.

    Because the body-fixed fields satisfy [E^_b, E^_c] = -C^a_{bc} E^_a,
    K^a_{ij} = d_j gamma_i^a - d_i gamma_j^a - C^a_{bc} gamma_i^b gamma_j^c.
    """
    gam = conn.gamma_at(x)
    jac = conn.jacobian_at(x)
    C = conn.group.structure_constants
    dg = np.einsum("iaj->aij", jac)
    return dg - dg.transpose(0, 2, 1) - gam @ (C @ gam.T)


def adjoint_connection_coeffs(conn: ConnectionData, x) -> np.ndarray:
    """Upsilon[a, i, b] = gamma_i^c C^a_{cb}."""
    return conn.gamma_at(x) @ conn.group.structure_constants


def adjoint_covariant_derivative(conn: ConnectionData, t, x, w, accuracy: int = 2):
    """Sampled D^A w / Dt = wdot + Upsilon(x) xdot w on the grid interior.

    Returns ``(t_interior, residual)`` with ``residual`` of shape
    ``(n_interior, dim_algebra)``.
    """
    h = uniform_step(t)
    t, x, w = np.asarray(t), np.asarray(x, dtype=float), np.asarray(w, dtype=float)
    if len(x) != len(t) or len(w) != len(t):
        raise InputError("x, w and t must have the same number of samples")
    sl, xdot = central_derivative(x, h, accuracy)
    _, wdot = central_derivative(w, h, accuracy)
    out = np.empty_like(wdot)
    for k, (xk, vk, wk) in enumerate(zip(x[sl], xdot, w[sl])):
        U = adjoint_connection_coeffs(conn, xk)
        out[k] = wdot[k] + np.einsum("aib,i,b->a", U, vk, wk)
    return t[sl], out


def vector_field_bracket_fd(field_v, field_w, p, step: float = 1e-5):
    """Lie bracket [V, W](p) of fields on the embedded space R^n x R^{n x n}.

    Fields map ``(x, g) -> (xdot, gdot)`` and are differentiated by central
    differences along each other, ``[V, W] = DW.V - DV.W``.
    """
    x, g = _point(p)

    def directional(field, along):
        ax, ag = along
        fp = field((x + step * ax, g + step * ag))
        fm = field((x - step * ax, g - step * ag))
        return (fp[0] - fm[0]) / (2 * step), (fp[1] - fm[1]) / (2 * step)

    V, W = field_v((x, g)), field_w((x, g))
    dw = directional(field_w, V)
    dv = directional(field_v, W)
    return dw[0] - dv[0], dw[1] - dv[1]


def frame_bracket_table(conn: ConnectionData, x) -> np.ndarray:
    """c[g, a, b] with [e_a, e_b] = c^g_{ab} e_g for the frame (X_1.., E^_1..).

    [X_i, X_j] = K^a_{ij} E^_a, [X_i, E^_b] = Upsilon^a_{ib} E^_a and
    [E^_a, E^_b] = -C^c_{ab} E^_c.
    """
    n, m = conn.base_dim, conn.group.dim_algebra
    K = curvature(conn, x)
    U = adjoint_connection_coeffs(conn, x)
    c = np.zeros((n + m,) * 3)
    c[n:, :n, :n] = K
    c[n:, :n, n:] = U
    c[n:, n:, :n] = -U.transpose(0, 2, 1)
    c[n:, n:, n:] = -conn.group.structure_constants
    return c


def frame_evolution_residual(spec: LieGroupSpec, g, step: float = FD_STEP) -> float:
    """max |E~_a(A^c_b) + C^c_{ad} A^d_b| along the fibre through g.

    E~_a is the fundamental field of E_a; the derivative of A = Ad_{g^{-1}}
    along it is taken by central differences of the analytic matrix.
    """
    g = np.asarray(g, dtype=float)
    C = spec.structure_constants
    A = lie.adjoint_matrix(spec, g)
    worst = 0.0
    for a in range(spec.dim_algebra):
        Ep = g @ lie.exponential(spec, np.eye(spec.dim_algebra)[a], step)
        Em = g @ lie.exponential(spec, np.eye(spec.dim_algebra)[a], -step)
        dA = (lie.adjoint_matrix(spec, Ep) - lie.adjoint_matrix(spec, Em)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(dA + C[:, a, :] @ A))))
    return worst


def random_point(conn: ConnectionData, rng, scale: float = 1.0) -> BundlePoint:
    spec = conn.group
    x = rng.uniform(-scale, scale, conn.base_dim)
    if conn.domain is not None:
        lo = np.maximum(conn.domain.lower, -scale)
        hi = np.minimum(conn.domain.upper, scale)
        x = lo + (hi - lo) * rng.random(conn.base_dim)
    return BundlePoint(x, lie.exponential(spec, rng.normal(size=spec.dim_algebra)))


def axiom_residuals(conn: ConnectionData, rng, samples: int = 100) -> dict:
    """Largest violations of the connection axioms over random samples.

    ``fundamental``: |form(xi_M) - xi|; ``equivariance``: |R_h^* form -
    Ad_{h^{-1}} form|; ``horizontal``: |form(X_i)|; ``frame_evolution``:
    the fibre derivative law of A = Ad_{g^{-1}}.
    """
    spec = conn.group
    m = spec.dim_algebra
    out = dict(fundamental=0.0, equivariance=0.0, horizontal=0.0, frame_evolution=0.0)
    for _ in range(samples):
        x, g = random_point(conn, rng)
        xi = rng.normal(size=m)
        fund = connection_form(conn, (x, g), fundamental_field(conn, xi, (x, g)))
        out["fundamental"] = max(out["fundamental"], float(np.max(np.abs(fund - xi))))
        xdot = rng.normal(size=conn.base_dim)
        gdot = g @ lie.hat(spec, rng.normal(size=m))
        h = lie.exponential(spec, rng.normal(size=m))
        lhs = connection_form(conn, (x, g @ h), (xdot, gdot @ h))
        rhs = lie.adjoint_matrix(spec, h) @ connection_form(conn, (x, g), (xdot, gdot))
        out["equivariance"] = max(out["equivariance"], float(np.max(np.abs(lhs - rhs))))
        for i in range(conn.base_dim):
            hor = connection_form(conn, (x, g), horizontal_frame_field(conn, i, (x, g)))
            out["horizontal"] = max(out["horizontal"], float(np.max(np.abs(hor))))
        out["frame_evolution"] = max(out["frame_evolution"], frame_evolution_residual(spec, g))
    return out
