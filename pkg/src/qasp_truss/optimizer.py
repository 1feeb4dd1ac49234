"""Outer truss-optimisation loop.

Each outer iteration solves equilibrium by QA-SP (quadratic potential
energy), then updates the area ratios by QA-SP on the linearised compliance
with a quadratic penalty on the linearised volume constraint.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .qasp import QaspConfig, QaspProblem, QaspResult, run_qasp
from .quadform import LinearConstraint, LinearConstraintSet, QuadraticForm, penalty_augment, taylor1, taylor2
from .samplers import derive_seed
from .truss import (
    DesignVector,
    TrussSystem,
    UnitStiffnessSet,
    compliance,
    compliance_sensitivity,
    global_stiffness,
)

log = logging.getLogger(__name__)


def default_equilibrium_qasp(bits_per_var: int = 2) -> QaspConfig:
    return QaspConfig(bits_per_var=bits_per_var, epsilon0=1e-4 / (2**bits_per_var - 1))


def default_design_qasp(bits_per_var: int = 2) -> QaspConfig:
    return QaspConfig(bits_per_var=bits_per_var, epsilon0=1e-4 / (2**bits_per_var - 1))


@dataclass(frozen=True)
class OptConfig:
    v_target: float | None = None
    volume_penalty: float = 100.0
    design_box: tuple[float, float] = (-0.05, 0.05)
    alpha_min: float = 0.02
    alpha_max: float = 1.1
    equilibrium_qasp: QaspConfig = field(default_factory=default_equilibrium_qasp)
    design_qasp: QaspConfig = field(default_factory=default_design_qasp)
    max_outer: int = 500
    residual_tol: float = 1e-4
    max_equilibrium_restarts: int = 3
    warm_start: bool = False

    def __post_init__(self):
        if self.v_target is not None and self.v_target <= 0:
            raise ValueError("v_target must be positive")
        if self.alpha_min <= 0 or self.alpha_min > self.alpha_max:
            raise ValueError("need 0 < alpha_min <= alpha_max")
        if self.volume_penalty <= 0:
            raise ValueError("volume_penalty must be positive")
        if self.max_outer < 0:
            raise ValueError("max_outer must be >= 0")


@dataclass
class EquilibriumResult:
    u: np.ndarray
    omega: np.ndarray
    residual: float
    runs: list[QaspResult]

    @property
    def iterations(self):
        return [rec for run in self.runs for rec in run.iterations]


def relative_residual(units: UnitStiffnessSet, alpha, u, f) -> float:
    norm_f = np.linalg.norm(f)
    r = global_stiffness(units, alpha) @ u - f
    return float(np.linalg.norm(r) / norm_f) if norm_f else float(np.linalg.norm(r))


def equilibrium_problem(units: UnitStiffnessSet, alpha, f) -> QaspProblem:
    k = global_stiffness(units, alpha)
    f = np.asarray(f, dtype=float)

    def psi(u):
        return float(0.5 * u @ k @ u - f @ u)

    def model_at(u):
        return taylor2(psi(u), k @ u - f, k)

    return QaspProblem(units.n_free, psi, model_at)


def solve_equilibrium(
    units: UnitStiffnessSet,
    design,
    f,
    config: QaspConfig,
    sampler,
    *,
    u0=None,
    seed: int = 0,
    residual_tol: float | None = None,
    max_restarts: int = 0,
) -> EquilibriumResult:
    """Minimise the potential energy by QA-SP; return U and the sensitivities.

    When ``residual_tol`` is given and not met, QA-SP is restarted from the
    current U with a fresh grid, at most ``max_restarts`` times.
    """
    alpha = np.asarray(getattr(design, "alpha", design), dtype=float)
    f = np.asarray(f, dtype=float)
    problem = equilibrium_problem(units, alpha, f)
    u = np.zeros(units.n_free) if u0 is None else np.asarray(u0, dtype=float)
    runs = []
    for attempt in range(1 + max_restarts):
        run = run_qasp(problem, config, sampler, u, seed=derive_seed(seed, attempt))
        runs.append(run)
        u = run.x_final
        res = relative_residual(units, alpha, u, f)
        if residual_tol is None or res <= residual_tol:
            break
        log.info("equilibrium residual %.3g above %.3g; restarting QA-SP", res, residual_tol)
    return EquilibriumResult(u, compliance_sensitivity(units, u), res, runs)


def _recentred(form: QuadraticForm):
    """``model_at`` for a quadratic objective: exact re-expansion at any point."""

    def model_at(x):
        return QuadraticForm(form.evaluate(x), form.gradient + 2 * form.hessian @ x, form.hessian)

    return model_at


@dataclass
class DesignUpdate:
    design: DesignVector
    delta: np.ndarray
    run: QaspResult


def design_subproblem(system: TrussSystem, design: DesignVector, u, omega, config: OptConfig, v_target: float):
    """Penalised linear model of compliance and volume in the step ``delta``."""
    alpha = design.alpha
    objective = taylor1(compliance(system.f, u), omega)
    h = system.volume(alpha) - v_target
    constraints = LinearConstraintSet(equalities=(LinearConstraint(h, system.d),), c_h=config.volume_penalty)
    form = penalty_augment(objective, constraints).form
    lo = np.maximum(design.lower - alpha, config.design_box[0])
    hi = np.minimum(design.upper - alpha, config.design_box[1])
    return QaspProblem(alpha.size, form.evaluate, _recentred(form), np.minimum(lo, 0.0), np.maximum(hi, 0.0))


def update_design(
    system: TrussSystem,
    design: DesignVector,
    u,
    omega,
    config: OptConfig,
    sampler,
    *,
    v_target: float,
    seed: int = 0,
) -> DesignUpdate:
    problem = design_subproblem(system, design, u, omega, config, v_target)
    run = run_qasp(problem, config.design_qasp, sampler, np.zeros(problem.n_vars), seed=seed)
    return DesignUpdate(design.with_alpha(design.alpha + run.x_final), run.x_final, run)


@dataclass(frozen=True)
class TraceRow:
    k: int
    compliance: float
    volume_ratio: float
    alpha: np.ndarray
    residual: float
    accepted: bool


@dataclass
class OptimizeResult:
    design: DesignVector
    compliance: float
    volume_ratio: float
    v_target: float
    trace: list[TraceRow]
    stop_reason: str
    u: np.ndarray
    seed: int

    def compliances(self, accepted_only: bool = True) -> np.ndarray:
        return np.array([r.compliance for r in self.trace if r.accepted or not accepted_only])


def optimize(
    system: TrussSystem,
    config: OptConfig,
    sampler,
    alpha0,
    *,
    seed: int = 0,
    design_sampler=None,
) -> OptimizeResult:
    """Alternate equilibrium and design QA-SP until compliance stops decreasing.

    ``design_sampler`` defaults to ``sampler``.
    """
    design_sampler = design_sampler or sampler
    n = system.model.n_bars
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=float), (n,))
    design = DesignVector(alpha0, config.alpha_min, config.alpha_max)
    v_target = config.v_target if config.v_target is not None else system.volume(design)

    trace: list[TraceRow] = []
    u = np.zeros(system.dofs.n_free)
    best = None
    prev = np.inf
    reason = "max_outer"
    for k in range(config.max_outer + 1):
        eq = solve_equilibrium(
            system.units,
            design,
            system.f,
            config.equilibrium_qasp,
            sampler,
            u0=u if config.warm_start else None,
            seed=derive_seed(seed, k, 0),
            residual_tol=config.residual_tol,
            max_restarts=config.max_equilibrium_restarts,
        )
        c = compliance(system.f, eq.u)
        accepted = c < prev
        trace.append(TraceRow(k, c, system.volume(design) / v_target, design.alpha.copy(), eq.residual, accepted))
        log.info("outer %d: C=%.6g V/Vt=%.5f residual=%.2e", k, c, trace[-1].volume_ratio, eq.residual)
        if not accepted:
            reason = "no_decrease"
            break
        best = (design, eq.u, c)
        prev = c
        if k == config.max_outer:
            break
        upd = update_design(
            system, design, eq.u, eq.omega, config, design_sampler, v_target=v_target, seed=derive_seed(seed, k, 1)
        )
        design, u = upd.design, eq.u

    design, u_best, c_best = best
    return OptimizeResult(
        design, c_best, system.volume(design) / v_target, v_target, trace, reason, u_best, seed
    )
