import logging
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from symred import lie
from symred.errors import InputError, RepresentationError

vec3 = arrays(np.float64, 3, elements=st.floats(-2, 2))


def test_so3_bracket_e1_e2_is_e3():
    spec = lie.so3()
    np.testing.assert_array_equal(lie.bracket(spec, [1, 0, 0], [0, 1, 0]), [0, 0, 1])


def test_bracket_matches_matrix_commutator(group, rng):
    for _ in range(20):
        xi, eta = rng.normal(size=(2, group.dim_algebra))
        X, Y = lie.hat(group, xi), lie.hat(group, eta)
        np.testing.assert_allclose(lie.hat(group, lie.bracket(group, xi, eta)), X @ Y - Y @ X,
                                   atol=1e-12)


def test_se2_rotation_with_x_translation_gives_y_translation():
    spec = lie.se2()
    np.testing.assert_allclose(lie.bracket(spec, [1, 0, 0], [0, 1, 0]), [0, 0, 1], atol=1e-15)


def test_bracket_dimension_mismatch():
    with pytest.raises(InputError):
        lie.bracket(lie.so3(), [1, 0], [0, 1, 0])


@given(vec3, vec3, vec3, st.floats(-3, 3))
def test_bracket_bilinear_antisymmetric(a, b, c, s):
    spec = lie.so3()
    np.testing.assert_array_equal(lie.bracket(spec, a, a), np.zeros(3))
    np.testing.assert_allclose(lie.bracket(spec, a, b), -lie.bracket(spec, b, a), atol=1e-14)
    np.testing.assert_allclose(lie.bracket(spec, s * a + c, b),
                               s * lie.bracket(spec, a, b) + lie.bracket(spec, c, b), atol=1e-12)


def test_exp_zero_is_identity(group):
    np.testing.assert_array_equal(lie.exponential(group, np.zeros(group.dim_algebra)),
                                  group.identity)


def test_exp_quarter_turn_about_z():
    R = lie.exponential(lie.so3(), [0, 0, 1], math.pi / 2)
    np.testing.assert_allclose(R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_exp_nilpotent_matches_truncated_series():
    # Heisenberg algebra: strictly upper triangular 3x3, X^3 = 0
    basis = np.zeros((3, 3, 3))
    basis[0, 0, 1] = basis[1, 1, 2] = basis[2, 0, 2] = 1.0
    spec = lie.from_basis("heisenberg", basis)
    xi = np.array([0.7, -1.3, 2.1])
    X = lie.hat(spec, xi)
    series = np.eye(3) + X + X @ X / 2
    np.testing.assert_allclose(lie.exponential(spec, xi), series, rtol=0, atol=1e-15)


def test_exp_matches_reference_expm(group, rng):
    for _ in range(10):
        xi = 2 * rng.normal(size=group.dim_algebra)
        np.testing.assert_allclose(lie.exponential(group, xi),
                                   scipy.linalg.expm(lie.hat(group, xi)), atol=1e-12)


def test_exp_satisfies_constraint(group, rng):
    for _ in range(10):
        g = lie.exponential(group, 3 * rng.normal(size=group.dim_algebra))
        assert lie.constraint_residual(group, g) <= 1e-12


@given(vec3, st.floats(-1, 1), st.floats(-1, 1))
def test_exp_one_parameter_subgroup(xi, s, t):
    for spec in (lie.so3(), lie.se2()):
        lhs = lie.exponential(spec, xi, s) @ lie.exponential(spec, xi, t)
        np.testing.assert_allclose(lhs, lie.exponential(spec, xi, s + t), atol=1e-10)


def test_exp_rejects_nonfinite():
    with pytest.raises(InputError):
        lie.exponential(lie.so3(), [np.nan, 0, 0])


def test_adjoint_identity(group):
    np.testing.assert_allclose(lie.adjoint_matrix(group, group.identity),
                               np.eye(group.dim_algebra), atol=1e-15)


def test_adjoint_so3_is_transpose(rng):
    spec = lie.so3()
    for _ in range(10):
        R = lie.exponential(spec, rng.normal(size=3))
        np.testing.assert_allclose(lie.adjoint_matrix(spec, R), R.T, atol=1e-14)
        v = rng.normal(size=3)
        np.testing.assert_allclose(R.T @ lie.hat_so3(v) @ R, lie.hat_so3(R.T @ v), atol=1e-14)


def test_adjoint_u1_trivial(rng):
    spec = lie.u1()
    for th in rng.normal(size=5):
        assert lie.adjoint_matrix(spec, lie.exponential(spec, [th])) == pytest.approx(np.eye(1))


def test_adjoint_antihomomorphism(group, rng):
    g1, g2 = (lie.exponential(group, rng.normal(size=group.dim_algebra)) for _ in range(2))
    np.testing.assert_allclose(lie.adjoint_matrix(group, g1 @ g2),
                               lie.adjoint_matrix(group, g2) @ lie.adjoint_matrix(group, g1),
                               atol=1e-12)


def test_adjoint_derivative_is_minus_ad(group, rng):
    h = 1e-6
    xi = rng.normal(size=group.dim_algebra)
    dA = (lie.adjoint_matrix(group, lie.exponential(group, xi, h))
          - lie.adjoint_matrix(group, lie.exponential(group, xi, -h))) / (2 * h)
    np.testing.assert_allclose(dA, -lie.ad_matrix(group, xi), atol=1e-8)


def test_adjoint_rejects_element_outside_group():
    spec = lie.se2()
    g = np.eye(3)
    g[2, 0] = 0.5  # conjugation leaves se(2)
    with pytest.raises(RepresentationError):
        lie.adjoint_matrix(spec, g)


def test_vee_rejects_non_algebra_matrix():
    with pytest.raises(RepresentationError):
        lie.vee(lie.so3(), np.eye(3))


def test_hat_vee_round_trip(group, rng):
    xi = rng.normal(size=group.dim_algebra)
    np.testing.assert_allclose(lie.vee(group, lie.hat(group, xi)), xi, atol=1e-14)


def test_check_structure_builtins(group):
    assert group.name in ("so3", "u1", "se2")
    assert lie.check_structure(group).ok(1e-12)


def test_check_structure_one_dimensional_exact():
    r = lie.check_structure(lie.u1())
    assert (r.antisymmetry, r.closure, r.jacobi) == (0.0, 0.0, 0.0)


def test_check_structure_flags_perturbed_constants():
    spec = lie.so3()
    C = np.array(spec.structure_constants)
    C[2, 0, 1] += 0.1
    bad = lie.LieGroupSpec("bad", spec.basis, C)
    # oracle: the perturbed Jacobi sum computed directly
    jac = max(abs(sum(C[e, a, d] * C[d, b, c] + C[e, b, d] * C[d, c, a] + C[e, c, d] * C[d, a, b]
                      for d in range(3)))
              for e in range(3) for a in range(3) for b in range(3) for c in range(3))
    r = lie.check_structure(bad)
    assert r.jacobi >= 0.05
    assert r.jacobi == pytest.approx(jac, rel=1e-12)
    assert r.antisymmetry == pytest.approx(0.1)
    assert r.closure == pytest.approx(0.1)


def test_from_basis_prefers_commutators(caplog):
    spec = lie.so3()
    C = np.array(spec.structure_constants)
    C[0, 1, 2] = 5.0
    with caplog.at_level(logging.WARNING):
        fixed = lie.from_basis("so3b", spec.basis, C)
    np.testing.assert_allclose(fixed.structure_constants, spec.structure_constants, atol=1e-14)
    assert "commutator" in caplog.text


def test_from_basis_rejects_unclosed_basis():
    basis = np.zeros((2, 2, 2))
    basis[0, 0, 1] = 1.0
    basis[1, 1, 0] = 1.0  # e and f without h
    with pytest.raises(RepresentationError):
        lie.from_basis("ef", basis)


def test_spec_validation():
    with pytest.raises(InputError):
        lie.LieGroupSpec("x", np.zeros((2, 2, 3)), np.zeros((2, 2, 2)))
    with pytest.raises(InputError):
        lie.LieGroupSpec("x", np.stack([np.eye(2), np.eye(2)]), np.zeros((2, 2, 2)))
    with pytest.raises(InputError):
        lie.builtin_group("sl2")


def test_spec_serialization_round_trip(group):
    d = group.to_dict()
    back = lie.LieGroupSpec.from_dict(d)
    np.testing.assert_array_equal(back.basis, group.basis)
    np.testing.assert_allclose(back.structure_constants, group.structure_constants, atol=1e-15)
    assert back.constraint == group.constraint


def test_project_to_group(rng):
    spec = lie.so3()
    R = lie.exponential(spec, rng.normal(size=3)) + 1e-6 * rng.normal(size=(3, 3))
    P = lie.project_to_group(spec, R)
    assert lie.constraint_residual(spec, P) < 1e-14
    assert np.max(np.abs(P - R)) < 1e-5
