import numpy as np
import pytest

from qasp_truss.quadform import (
    LinearConstraint,
    LinearConstraintSet,
    QuadraticForm,
    penalty_augment,
    taylor1,
    taylor2,
)


def test_evaluate_zero_gives_constant(rng):
    a = rng.normal(size=(3, 3))
    f = QuadraticForm(1.5, rng.normal(size=3), a + a.T)
    assert f.evaluate(np.zeros(3)) == 1.5


def test_hessian_stores_half():
    f = taylor2(0.0, [0.0], [[2.0]])
    assert f.evaluate([3.0]) == pytest.approx(9.0)
    np.testing.assert_array_equal(f.hessian, [[1.0]])


def test_quadratic_taylor_is_exact(rng):
    h = rng.normal(size=(4, 4))
    h = h @ h.T
    b = rng.normal(size=4)
    fun = lambda x: 0.5 * x @ h @ x - b @ x  # noqa: E731
    x0 = rng.normal(size=4)
    model = taylor2(fun(x0), h @ x0 - b, h)
    for _ in range(10):
        d = rng.normal(size=4)
        assert model.evaluate(d) == pytest.approx(fun(x0 + d), rel=1e-12, abs=1e-12)


def test_asymmetric_hessian_rejected():
    with pytest.raises(ValueError):
        QuadraticForm(0, [0, 0], [[1, 1], [0, 1]])
    with pytest.raises(ValueError):
        taylor2(0, [0, 0], [[1, 1], [0, 1]])


def test_linear_form():
    f = taylor1(2.0, [1.0, -1.0])
    assert f.n_vars == 2
    assert f.evaluate([3.0, 1.0]) == 4.0


def test_equality_penalty_expansion(rng):
    obj = taylor1(1.0, rng.normal(size=3))
    h = LinearConstraint(0.3, rng.normal(size=3))
    aug = penalty_augment(obj, LinearConstraintSet(equalities=(h,), c_h=100.0))
    assert aug.n_slack == 0
    for _ in range(10):
        d = rng.normal(size=3)
        expected = obj.evaluate(d) + 100 * (0.3 + h.gradient @ d) ** 2
        assert aug.form.evaluate(d) == pytest.approx(expected, rel=1e-12)


def test_inequality_slack(rng):
    obj = QuadraticForm(0.0, np.zeros(2), np.eye(2))
    l = LinearConstraint(-0.7, [1.0, 2.0])
    aug = penalty_augment(obj, LinearConstraintSet(inequalities=(l,), c_l=5.0))
    assert aug.n_slack == 1 and aug.n_design == 2
    np.testing.assert_array_equal(aug.slack_upper, [1.4])
    d, lam = np.array([0.1, -0.2]), 0.4
    expected = d @ d + 5.0 * (-0.7 + 0.1 - 0.4 + lam) ** 2
    assert aug.form.evaluate(np.r_[d, lam]) == pytest.approx(expected)


def test_feasible_point_has_zero_penalty():
    obj = taylor1(3.0, [1.0])
    aug = penalty_augment(obj, LinearConstraintSet(equalities=(LinearConstraint(0.0, [1.0]),), c_h=10.0))
    assert aug.form.evaluate([0.0]) == 3.0


def test_penalty_must_be_positive():
    with pytest.raises(ValueError):
        LinearConstraintSet(equalities=(LinearConstraint(0.0, [1.0]),), c_h=0.0)


def test_constraint_size_mismatch():
    with pytest.raises(ValueError):
        penalty_augment(taylor1(0, [1, 2]), LinearConstraintSet(equalities=(LinearConstraint(0, [1]),), c_h=1))
