"""Scenario configuration files (JSON).

Layout::

    {
      "scenario": {"name": "wong", "params": {...}}
                | {"inline": {"group": ..., "base_dim": n, "connection": field,
                              "metric": {...}, "force": {...}}
                              or "dynamics": {"D": map, "G": map}},
      "initial": {"x0": [...], "v0": [...], "w0": [...],
                  "g0": {"matrix": [[...]]} | {"exp": [...]}},
      "integrator": {"step": h, "t_end": T, "method": name, "drift_tolerance": tol},
      "output": {"reduced": path, "full": path, "report": path},
      "compare": {"tolerance": tol, "halvings": k}
    }

Everything except ``scenario`` is optional; missing values fall back to the
scenario defaults.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import lie
from .bundle import ChartDomain, ConnectionData
from .errors import InputError, SymredError
from .fields import make_field, make_state_map
from .integrate import IntegratorConfig
from .mechanical import ForceField, InvariantMetric, Scenario, mechanical_sode, scenario_library
from .reduction import FullState, InvariantSODE, reduced_rhs


class ConfigError(InputError):
    pass


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Scenario
    integrator: IntegratorConfig
    output: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def initial(self) -> FullState:
        return self.scenario.initial

    @property
    def system(self) -> InvariantSODE:
        return self.scenario.system

    def with_overrides(self, step=None, t_end=None, method=None) -> "RunConfig":
        cfg = self.integrator
        try:
            cfg = IntegratorConfig(step if step is not None else cfg.step,
                                   t_end if t_end is not None else cfg.t_end,
                                   method if method is not None else cfg.method,
                                   cfg.drift_tolerance)
        except InputError as exc:
            raise ConfigError(f"command-line override: {exc}") from None
        return replace(self, integrator=cfg)


def _locate(text: str | None, path: str) -> int | None:
    """Best-effort line number of the innermost key of a dotted path."""
    if not text:
        return None
    pos = 0
    for key in path.split("."):
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.start()
    else:
        return text.count("\n", 0, pos) + 1
    return text.count("\n", 0, pos) + 1 if pos else None


def _fail(text, path, msg):
    line = _locate(text, path)
    where = f"field '{path}'" + (f" (line {line})" if line else "")
    raise ConfigError(f"config {where}: {msg}")


def _section(d, key, text, prefix=""):
    val = d.get(key, {})
    if not isinstance(val, dict):
        _fail(text, prefix + key, "expected an object")
    return val


def _vector(val, n, text, path):
    try:
        a = np.array(val, dtype=float)
    except (TypeError, ValueError):
        _fail(text, path, "expected a numeric array")
    if a.ndim == 0 and n == 1:
        a = a.reshape(1)
    if a.shape != (n,):
        _fail(text, path, f"expected {n} components, got shape {list(a.shape)}")
    if not np.all(np.isfinite(a)):
        _fail(text, path, "non-finite entries")
    return a


_PATH_RE = re.compile(r"^(params\.[\w.]+|[\w]+(?:\.[\w]+)+)")


def _wrap(text, prefix, exc):
    m = _PATH_RE.match(str(exc))
    path = prefix + (m.group(1) if m else "")
    _fail(text, path.rstrip("."), str(exc))


def _group(spec, text):
    if isinstance(spec, str):
        try:
            return lie.builtin_group(spec)
        except SymredError as exc:
            _fail(text, "scenario.inline.group", str(exc))
    if isinstance(spec, dict):
        try:
            return lie.LieGroupSpec.from_dict(spec)
        except (SymredError, KeyError, TypeError, ValueError) as exc:
            _fail(text, "scenario.inline.group", f"invalid group definition ({exc})")
    _fail(text, "scenario.inline.group", "expected a built-in name or a group object")


def _inline(d, text) -> Scenario:
    pre = "scenario.inline."
    spec = _group(d.get("group"), text)
    n = d.get("base_dim")
    if not isinstance(n, int) or n < 1:
        _fail(text, pre + "base_dim", f"expected a positive integer, got {n!r}")
    m = spec.dim_algebra
    try:
        conn_spec = d.get("connection", {"kind": "constant", "value": np.zeros((n, m)).tolist()})
        gam, dgam = make_field(conn_spec, n, pre + "connection")
        dom = None
        if "domain" in d:
            dd = d["domain"]
            dom = ChartDomain(tuple(_vector(dd.get("lower"), n, text, pre + "domain.lower")),
                              tuple(_vector(dd.get("upper"), n, text, pre + "domain.upper")))
        if m == 1:
            # a 1-d connection may be given as a plain covector field A_i
            A, dA = gam, dgam
            gam = lambda x: np.asarray(A(x)).reshape(n, 1)
            dgam = None if dA is None else (lambda x: np.asarray(dA(x)).reshape(n, 1, n))
        conn = ConnectionData(spec, n, gam, dgam, dom)
        if "metric" in d:
            md = d["metric"]
            kb, dkb = make_field(md.get("k_base", {"kind": "constant", "value": np.eye(n).tolist()}),
                                 n, pre + "metric.k_base")
            kv, dkv = make_field(md.get("k_vert", {"kind": "constant", "value": np.eye(m).tolist()}),
                                 n, pre + "metric.k_vert")
            fd = d.get("force", {})
            force = ForceField(make_state_map(fd.get("phi_base"), n, m, n, pre + "force.phi_base"),
                               make_state_map(fd.get("phi_vert"), n, m, m, pre + "force.phi_vert"))
            metric = InvariantMetric(kb, kv, conn, dkb if dkb is None else
                                     (lambda x, f=dkb: np.asarray(f(x)).reshape(n, n, n)),
                                     dkv if dkv is None else
                                     (lambda x, f=dkv: np.asarray(f(x)).reshape(m, m, n)))
            sys, force_obj = mechanical_sode(metric, force), force
        elif "dynamics" in d:
            dyn = d["dynamics"]
            sys = InvariantSODE(conn, make_state_map(dyn.get("D"), n, m, n, pre + "dynamics.D"),
                                make_state_map(dyn.get("G"), n, m, m, pre + "dynamics.G"))
            metric = force_obj = None
        else:
            _fail(text, pre.rstrip("."), "needs either 'metric' or 'dynamics'")
    except ConfigError:
        raise
    except SymredError as exc:
        _wrap(text, "", exc)
    init = FullState(np.zeros(n), np.zeros(n), np.zeros(m), spec.identity)
    cfg = IntegratorConfig(1e-3, 1.0)
    return Scenario("inline", sys, init, cfg, metric, force_obj, {})


def parse_config(data: dict, text: str | None = None, source: str | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    sc = data.get("scenario")
    if not isinstance(sc, dict):
        _fail(text, "scenario", "missing or not an object")
    if "inline" in sc:
        scn = _inline(sc["inline"], text)
    else:
        name = sc.get("name")
        if not isinstance(name, str):
            _fail(text, "scenario.name", "expected a scenario name")
        try:
            scn = scenario_library(name, sc.get("params", {}))
        except SymredError as exc:
            if str(exc).startswith("unknown scenario"):
                _fail(text, "scenario.name", str(exc))
            _wrap(text, "scenario.", exc)
    sys = scn.system
    n, m, k = sys.base_dim, sys.dim_algebra, sys.group.matrix_size

    ini = _section(data, "initial", text)
    x0 = _vector(ini["x0"], n, text, "initial.x0") if "x0" in ini else scn.initial.x
    v0 = _vector(ini["v0"], n, text, "initial.v0") if "v0" in ini else scn.initial.v
    w0 = _vector(ini["w0"], m, text, "initial.w0") if "w0" in ini else scn.initial.w
    g0 = scn.initial.g
    if "g0" in ini:
        gd = ini["g0"]
        if isinstance(gd, dict) and "matrix" in gd:
            g0 = np.array(gd["matrix"], dtype=float)
            if g0.shape != (k, k):
                _fail(text, "initial.g0.matrix", f"expected a {k}x{k} matrix, got {list(g0.shape)}")
        elif isinstance(gd, dict) and "exp" in gd:
            g0 = lie.exponential(sys.group, _vector(gd["exp"], m, text, "initial.g0.exp"))
        else:
            _fail(text, "initial.g0", "expected {'matrix': ...} or {'exp': ...}")

    it = _section(data, "integrator", text)
    base = scn.integrator
    try:
        cfg = IntegratorConfig(float(it.get("step", base.step)), float(it.get("t_end", base.t_end)),
                               it.get("method", base.method),
                               float(it.get("drift_tolerance", base.drift_tolerance)))
    except (InputError, TypeError, ValueError) as exc:
        bad = next((key for key in ("step", "t_end", "method", "drift_tolerance")
                    if key in str(exc)), "")
        _fail(text, "integrator." + bad if bad else "integrator", str(exc))
    drift = lie.constraint_residual(sys.group, g0)
    if drift > cfg.drift_tolerance:
        _fail(text, "initial.g0", f"not in the group (constraint residual {drift:.3g})")

    init = FullState(x0, v0, w0, g0)
    try:
        reduced_rhs(sys, init.reduced())
    except SymredError as exc:
        _fail(text, "initial", f"dynamics cannot be evaluated at the initial state: {exc}")
    scn = replace(scn, initial=init, integrator=cfg)
    output = _section(data, "output", text)
    compare = _section(data, "compare", text)
    tol = compare.get("tolerance", 1e-5)
    if not isinstance(tol, (int, float)) or tol < 0:
        _fail(text, "compare.tolerance", "expected a non-negative number")
    halv = compare.get("halvings", 1)
    if not isinstance(halv, int) or halv < 0:
        _fail(text, "compare.halvings", "expected a non-negative integer")
    return RunConfig(scn, cfg, dict(output), {"tolerance": float(tol), "halvings": halv}, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data, text, str(path))
