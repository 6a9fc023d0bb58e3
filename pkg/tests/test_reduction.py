import numpy as np
import pytest

import oracles as O
from conftest import curved_connection
from symred import bundle as B
from symred import lie
from symred.errors import ChartExitError, InputError, NonFiniteError
from symred.integrate import IntegratorConfig, integrate_full, integrate_reduced
from symred.mechanical import scenario_library
from symred.reduction import (FullState, InvariantSODE, ReducedState, decompose, full_rhs,
                              invariance_audit, reduced_rhs)


def zero_system(spec, n, conn=None):
    m = spec.dim_algebra
    conn = conn or B.flat_connection(spec, n)
    return InvariantSODE(conn, lambda x, v, w: np.zeros(n), lambda x, v, w: np.zeros(m))


def random_system(spec, n, rng):
    """Affine D, G in (x, v, w) over a curved connection."""
    m = spec.dim_algebra
    conn = curved_connection(spec, n, rng)
    Dx, Dv, Dw = 0.3 * rng.normal(size=(3, n, max(n, m)))
    Gx, Gv, Gw = 0.3 * rng.normal(size=(3, m, max(n, m)))
    D = lambda x, v, w: -x + Dv[:, :n] @ v + Dw[:, :m] @ w
    G = lambda x, v, w: Gx[:, :n] @ x + Gv[:, :n] @ v + Gw[:, :m] @ w
    return InvariantSODE(conn, D, G)


def random_full_state(sys, rng):
    spec = sys.group
    return FullState(rng.normal(size=sys.base_dim), rng.normal(size=sys.base_dim),
                     rng.normal(size=sys.dim_algebra),
                     lie.exponential(spec, rng.normal(size=spec.dim_algebra)))


def test_free_reduced_motion_is_straight():
    sys = zero_system(lie.so3(), 2)
    s0 = ReducedState(np.array([1.0, -1.0]), np.array([0.5, 0.25]), np.array([0.1, 0.2, 0.3]))
    tr = integrate_reduced(sys, s0, IntegratorConfig(0.1, 2.0))
    np.testing.assert_allclose(tr.x, s0.x + tr.t[:, None] * s0.v, atol=1e-14)
    np.testing.assert_array_equal(tr.w, np.tile(s0.w, (len(tr.t), 1)))


def test_wong_velocity_is_covariantly_constant(rng):
    scn = scenario_library("wong")
    sys = scn.system
    for _ in range(10):
        s = ReducedState(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3))
        _, _, wdot = reduced_rhs(sys, s)
        U = B.adjoint_connection_coeffs(sys.conn, s.x)
        np.testing.assert_allclose(wdot + np.einsum("aib,i,b->a", U, s.v, s.w), 0, atol=1e-12)


def test_wong_raw_components_are_not_constant():
    # the charge is covariantly constant, so with a curved non-abelian
    # connection its body-frame components rotate: wdot = -[gamma v, w]
    scn = scenario_library("wong")
    s = scn.initial.reduced()
    _, _, wdot = reduced_rhs(scn.system, s)
    gv = s.v @ scn.system.conn.gamma_at(s.x)
    np.testing.assert_allclose(wdot, -lie.bracket(lie.so3(), gv, s.w), atol=1e-13)
    assert np.linalg.norm(wdot) > 1e-3


def test_magnetic_reduced_force(rng):
    scn = scenario_library("magnetic_particle")
    for _ in range(5):
        x, v = rng.normal(size=(2, 3))
        w = rng.normal(size=1)
        _, vdot, wdot = reduced_rhs(scn.system, ReducedState(x, v, w))
        # Lorentz force w v x B with B = e_z
        np.testing.assert_allclose(vdot, w[0] * np.cross(v, [0, 0, 1.0]), atol=1e-14)
        assert wdot[0] == 0.0


def test_reduced_rhs_validation():
    sys = zero_system(lie.so3(), 2)
    with pytest.raises(InputError):
        reduced_rhs(sys, ReducedState(np.zeros(2), np.zeros(2), np.zeros(2)))
    bad = InvariantSODE(sys.conn, lambda x, v, w: np.array([np.nan, 0.0]), sys.G)
    with pytest.raises(NonFiniteError):
        reduced_rhs(bad, ReducedState(np.zeros(2), np.zeros(2), np.zeros(3)))
    boxed = B.ConnectionData(lie.u1(), 1, lambda x: np.zeros((1, 1)),
                             domain=B.ChartDomain((-1.0,), (1.0,)))
    with pytest.raises(ChartExitError):
        reduced_rhs(zero_system(lie.u1(), 1, boxed), ReducedState([2.0], [0.0], [0.0]))


def test_full_rhs_trivial_group_motion(rng):
    sys = zero_system(lie.so3(), 2)
    s = random_full_state(sys, rng)
    s0 = FullState(s.x, s.v, np.zeros(3), s.g)
    assert not full_rhs(sys, s0)[2].any()


def test_full_rhs_one_parameter_subgroup(group, rng):
    sys = zero_system(group, 1)
    w = rng.normal(size=group.dim_algebra)
    g0 = lie.exponential(group, rng.normal(size=group.dim_algebra))
    cfg = IntegratorConfig(0.01, 1.0)
    tr = integrate_full(sys, FullState([0.0], [0.0], w, g0), cfg)
    for k in (0, 37, 100):
        np.testing.assert_allclose(tr.g[k], lie.exponential(group, w, tr.t[k]) @ g0, atol=1e-12)


def test_full_rhs_drift_check():
    sys = zero_system(lie.so3(), 1)
    s = FullState([0.0], [0.0], np.zeros(3), np.diag([1.0, 1.0, 1.1]))
    from symred.errors import DriftError
    with pytest.raises(DriftError):
        full_rhs(sys, s, drift_tolerance=1e-9)


def test_magnetic_fibre_angle_matches_geodesic():
    scn = scenario_library("magnetic_particle")
    cfg = IntegratorConfig(1e-3, 2.0)
    tr = integrate_full(scn.system, scn.initial, cfg)
    metric = O.kaluza_klein_metric(O.uniform_field_potential())
    ref = O.geodesic_rk4(metric, np.zeros(4), np.array([1.0, 0, 0, 1.0]),
                         cfg.effective_step, cfg.n_steps)
    theta = O.u1_angle(tr.g)
    assert np.max(np.abs(theta - ref[:, 3])) <= 1e-6
    assert np.max(np.abs(tr.x - ref[:, :3])) <= 1e-6


def test_decompose_trivial(rng):
    sys = zero_system(lie.so3(), 2)
    s = random_full_state(sys, rng)
    d = decompose(sys, FullState(s.x, s.v, np.zeros(3), s.g))
    assert not d.vertical_lift.as_array().any()
    assert not d.connection_part.as_array().any()


def test_decompose_parts(group, rng):
    sys = random_system(group, 2, rng)
    for _ in range(10):
        s = random_full_state(sys, rng)
        d = decompose(sys, s)
        xdot, vdot, gdot, wdot = full_rhs(sys, s)
        form = B.connection_form(sys.conn, (s.x, s.g), (xdot, gdot))
        np.testing.assert_allclose(d.connection_part.ec, form, atol=1e-12)
        # part (i) has no vertical moving-frame components, (ii)/(iii) no base ones
        assert not d.horizontal.ec.any() and not d.horizontal.ev.any()
        for part in (d.vertical_lift, d.connection_part):
            assert not part.xc.any() and not part.xv.any()
        # reassembly against the lifted full vector field
        A = lie.adjoint_matrix(group, s.g)
        U = B.adjoint_connection_coeffs(sys.conn, s.x)
        lifted = np.concatenate([xdot, form, vdot, A @ (wdot + np.einsum("aib,i,b->a", U, s.v, s.w))])
        assert np.max(np.abs(d.total().as_array() - lifted)) <= 1e-12


def test_decompose_vertical_lift_is_frame_derivative(rng):
    # D^a is the time derivative of the moving-frame components A(g) w
    spec = lie.so3()
    sys = random_system(spec, 2, rng)
    s0 = random_full_state(sys, rng)
    tr = integrate_full(sys, s0, IntegratorConfig(1e-3, 0.02))
    k = 10
    va = [lie.adjoint_matrix(spec, tr.g[j]) @ tr.w[j] for j in range(k - 2, k + 3)]
    fd = (-va[4] + 8 * va[3] - 8 * va[1] + va[0]) / (12 * 1e-3)
    np.testing.assert_allclose(decompose(sys, tr.state(k)).vertical_lift.ev, fd, atol=1e-9)


def test_invariance_audit_abelian_quarter_turn():
    scn = scenario_library("magnetic_particle")
    shift = lie.exponential(lie.u1(), [np.pi / 2])
    rep = invariance_audit(scn.system, scn.initial, shift, IntegratorConfig(1e-3, 1.0))
    assert rep.reduced_deviation <= 1e-10
    assert rep.equivariance_deviation <= 1e-10


def test_invariance_audit_decoupled_exact(rng):
    spec = lie.so3()
    sys = InvariantSODE(B.flat_connection(spec, 2), lambda x, v, w: np.array([1.0, -0.5]),
                        lambda x, v, w: np.array([0.1, 0.2, 0.3]))
    s0 = random_full_state(sys, rng)
    rep = invariance_audit(sys, s0, lie.exponential(spec, rng.normal(size=3)),
                           IntegratorConfig(0.01, 1.0))
    assert rep.reduced_deviation == 0.0
    assert rep.equivariance_deviation <= 1e-12


def test_equivariance_of_full_trajectories(rng):
    spec = lie.se2()
    sys = random_system(spec, 2, rng)
    s0 = random_full_state(sys, rng)
    h = lie.exponential(spec, rng.normal(size=3))
    cfg = IntegratorConfig(0.01, 1.0)
    a = integrate_full(sys, s0, cfg)
    b = integrate_full(sys, FullState(s0.x, s0.v, s0.w, s0.g @ h), cfg)
    assert np.max(np.abs(a.g @ h - b.g)) <= 1e-8


def test_full_marginals_satisfy_reduced_dynamics(rng):
    sys = random_system(lie.so3(), 2, rng)
    s0 = random_full_state(sys, rng)
    cfg = IntegratorConfig(0.01, 1.0)
    full = integrate_full(sys, s0, cfg)
    red = integrate_reduced(sys, s0.reduced(), cfg)
    for key in ("x", "v", "w"):
        np.testing.assert_allclose(getattr(full, key), getattr(red, key), atol=1e-9)
