"""Quadratic local models and penalty augmentation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QuadraticForm:
    """``evaluate(d) = constant + d'g + d'Ad``.

    ``hessian`` holds ``A``, i.e. half the true second derivative.
    """

    constant: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        a = np.asarray(self.hessian, dtype=float).reshape(g.size, g.size)
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0))):
            raise ValueError("hessian is not symmetric")
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", 0.5 * (a + a.T))

    @property
    def n_vars(self) -> int:
        return self.gradient.size

    @classmethod
    def linear(cls, constant, gradient) -> "QuadraticForm":
        g = np.atleast_1d(np.asarray(gradient, dtype=float))
        return cls(constant, g, np.zeros((g.size, g.size)))

    def evaluate(self, delta) -> float:
        d = np.asarray(delta, dtype=float)
        return float(self.constant + d @ self.gradient + d @ self.hessian @ d)


def taylor2(constant, gradient, hessian_full) -> QuadraticForm:
    """Second-order Taylor model from the full Hessian (stores half of it)."""
    h = np.atleast_2d(np.asarray(hessian_full, dtype=float))
    scale = max(1.0, np.abs(h).max(initial=0))
    if np.abs(h - h.T).max(initial=0) > 1e-12 * scale:
        raise ValueError("hessian is not symmetric")
    return QuadraticForm(constant, gradient, 0.5 * h)


def taylor1(constant, gradient) -> QuadraticForm:
    return QuadraticForm.linear(constant, gradient)


@dataclass(frozen=True)
class LinearConstraint:
    """Linearised constraint ``value + gradient' d``."""

    value: float
    gradient: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "gradient", np.atleast_1d(np.asarray(self.gradient, dtype=float)))


@dataclass(frozen=True)
class LinearConstraintSet:
    equalities: tuple[LinearConstraint, ...] = ()
    inequalities: tuple[LinearConstraint, ...] = ()
    c_h: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c_l: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        c_h = np.broadcast_to(np.asarray(self.c_h, dtype=float), (len(self.equalities),)).copy()
        c_l = np.broadcast_to(np.asarray(self.c_l, dtype=float), (len(self.inequalities),)).copy()
        if np.any(c_h <= 0) or np.any(c_l <= 0):
            raise ValueError("penalty factors must be positive")
        object.__setattr__(self, "c_h", c_h)
        object.__setattr__(self, "c_l", c_l)


@dataclass(frozen=True)
class AugmentedForm:
    form: QuadraticForm
    n_slack: int
    slack_upper: np.ndarray

    @property
    def n_design(self) -> int:
        return self.form.n_vars - self.n_slack


def penalty_augment(objective: QuadraticForm, constraints: LinearConstraintSet) -> AugmentedForm:
    """Expand ``f + sum c_h (h + Dh'd)^2 + sum c_l (l + Dl'd + lam)^2`` over ``(d, lam)``.

    Slack variables ``lam >= 0`` are appended after the design variables. Their
    finite upper bound ``max(1, 2|l|)`` covers the feasible slack at ``d = 0``.
    """
    n = objective.n_vars
    n_slack = len(constraints.inequalities)
    m = n + n_slack
    const = objective.constant
    g = np.zeros(m)
    g[:n] = objective.gradient
    a = np.zeros((m, m))
    a[:n, :n] = objective.hessian

    for c, h in zip(constraints.c_h, constraints.equalities):
        if h.gradient.size != n:
            raise ValueError("constraint gradient does not match objective size")
        row = np.zeros(m)
        row[:n] = h.gradient
        const += c * h.value**2
        g += 2 * c * h.value * row
        a += c * np.outer(row, row)

    for j, (c, l) in enumerate(zip(constraints.c_l, constraints.inequalities)):
        if l.gradient.size != n:
            raise ValueError("constraint gradient does not match objective size")
        row = np.zeros(m)
        row[:n] = l.gradient
        row[n + j] = 1.0
        const += c * l.value**2
        g += 2 * c * l.value * row
        a += c * np.outer(row, row)

    upper = np.array([max(1.0, 2 * abs(l.value)) for l in constraints.inequalities])
    return AugmentedForm(QuadraticForm(const, g, a), n_slack, upper)
