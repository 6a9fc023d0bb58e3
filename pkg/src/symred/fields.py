"""Declarative field descriptions turned into callables.

A field spec is a dict with a ``kind`` key.  ``make_field`` returns a pair
``(f, jac)`` where ``f(x)`` evaluates the field and ``jac(x)`` its Jacobian
with the differentiation axis appended last (``None`` when not available
in closed form).
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InputError


def _arr(d, key, where):
    if key not in d:
        raise InputError(f"{where}: missing field '{key}'")
    try:
        a = np.array(d[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}.{key}: not a numeric array ({exc})") from None
    if not np.all(np.isfinite(a)):
        raise InputError(f"{where}.{key}: non-finite entries")
    return a


def _constant(spec, dim, where):
    val = _arr(spec, "value", where)
    return (lambda x: val), (lambda x: np.zeros(val.shape + (dim,)))


def _affine(spec, dim, where):
    val = _arr(spec, "value", where)
    slope = _arr(spec, "slope", where)
    if slope.shape != val.shape + (dim,):
        raise InputError(f"{where}.slope: expected shape {val.shape + (dim,)}, got {slope.shape}")
    return (lambda x: val + slope @ x), (lambda x: slope)


def _uniform_magnetic(spec, dim, where):
    B = _arr(spec, "B", where)
    if dim == 3:
        if B.shape != (3,):
            raise InputError(f"{where}.B: expected 3 components for a 3-d base")
        # A = B x r / 2, dA_i/dx^j = (B x e_j)_i / 2
        J = 0.5 * np.stack([np.cross(B, e) for e in np.eye(3)], axis=-1)
        return (lambda x: J @ x), (lambda x: J)
    if dim == 2:
        if B.size != 1:
            raise InputError(f"{where}.B: expected a scalar for a 2-d base")
        b = float(B.reshape(-1)[0])
        J = 0.5 * b * np.array([[0.0, -1.0], [1.0, 0.0]])
        return (lambda x: J @ x), (lambda x: J)
    raise InputError(f"{where}: uniform_magnetic needs a 2-d or 3-d base, got {dim}")


def _gaussian_bump(spec, dim, where):
    base = float(spec.get("base", 1.0))
    amp = float(spec.get("amplitude", 0.5))
    width = float(spec.get("width", 1.0))
    center = np.array(spec.get("center", [0.0] * dim), dtype=float)
    if center.shape != (dim,):
        raise InputError(f"{where}.center: expected {dim} components")
    if width <= 0:
        raise InputError(f"{where}.width: must be positive")

    def f(x):
        r = x - center
        return np.array(base + amp * np.exp(-0.5 * (r @ r) / width ** 2))

    def jac(x):
        r = x - center
        return -amp * np.exp(-0.5 * (r @ r) / width ** 2) * r / width ** 2

    return f, jac


def _grid(spec, dim, where):
    axes = spec.get("axes")
    if not isinstance(axes, list) or len(axes) != dim:
        raise InputError(f"{where}.axes: expected {dim} coordinate arrays")
    axes = [np.array(a, dtype=float) for a in axes]
    values = _arr(spec, "values", where)
    lead = tuple(len(a) for a in axes)
    if values.shape[:dim] != lead:
        raise InputError(f"{where}.values: leading shape {values.shape[:dim]} does not match "
                         f"axes {lead}")
    interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=True)
    out_shape = values.shape[dim:]

    def f(x):
        try:
            return interp(np.asarray(x)[None, :])[0].reshape(out_shape)
        except ValueError:
            raise InputError(f"{where}: point {np.asarray(x).tolist()} outside the grid") from None

    return f, None


KINDS = {
    "constant": _constant,
    "affine": _affine,
    "uniform_magnetic": _uniform_magnetic,
    "gaussian_bump": _gaussian_bump,
    "grid": _grid,
}


def make_field(spec, dim: int, where: str = "field"):
    """Build ``(f, jac)`` from a field spec for a base of dimension ``dim``."""
    if not isinstance(spec, dict):
        raise InputError(f"{where}: expected an object with a 'kind' key")
    kind = spec.get("kind")
    if kind not in KINDS:
        raise InputError(f"{where}.kind: unknown field kind {kind!r}; known: {sorted(KINDS)}")
    return KINDS[kind](spec, dim, where)


def make_state_map(spec, base_dim: int, alg_dim: int, out_dim: int, where: str = "map"):
    """Affine map of the invariant coordinates, out = c + Mx x + Mv v + Mw w.

    ``None`` gives the zero map.
    """
    if spec is None:
        return lambda x, v, w: np.zeros(out_dim)
    if not isinstance(spec, dict):
        raise InputError(f"{where}: expected an object")
    c = np.array(spec.get("offset", np.zeros(out_dim)), dtype=float)
    if c.shape != (out_dim,):
        raise InputError(f"{where}.offset: expected {out_dim} components, got shape {c.shape}")
    mats = {}
    for key, d in (("x", base_dim), ("v", base_dim), ("w", alg_dim)):
        M = np.array(spec.get(key, np.zeros((out_dim, d))), dtype=float)
        if M.shape != (out_dim, d):
            raise InputError(f"{where}.{key}: expected shape {(out_dim, d)}, got {M.shape}")
        mats[key] = M
    Mx, Mv, Mw = mats["x"], mats["v"], mats["w"]
    return lambda x, v, w: c + Mx @ x + Mv @ v + Mw @ w
