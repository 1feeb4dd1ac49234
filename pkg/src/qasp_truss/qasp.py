"""Annealing-assisted sequential programming.

Each iteration builds a quadratic model of the objective at the current
point, discretises the step on an ``L``-bit grid clipped to the trust box and
variable bounds, asks a QUBO sampler for the best grid step, and keeps it
only if the true objective strictly decreases. Otherwise the grid spacing is
shrunk by ``xi``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .encoding import EncodingSpec, decode, qubo_from_quadratic, range_from_error
from .quadform import QuadraticForm
from .samplers import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QaspConfig:
    bits_per_var: int = 2
    epsilon0: float | np.ndarray = 1e-4 / 3
    box_min: float | np.ndarray = -np.inf
    box_max: float | np.ndarray = np.inf
    xi: float = 0.5
    n_steps: int = 200
    n_failed: int = 10
    epsilon_min: float = 1e-14

    def __post_init__(self):
        if not 0 < self.xi < 1:
            raise ValueError("xi must lie in (0, 1)")
        if self.bits_per_var < 1:
            raise ValueError("bits_per_var must be >= 1")
        if np.any(np.asarray(self.epsilon0) <= 0):
            raise ValueError("epsilon0 must be positive")
        if np.any(np.asarray(self.box_min) > 0) or np.any(np.asarray(self.box_max) < 0):
            raise ValueError("trust box must contain 0")
        if self.n_steps < 0 or self.n_failed < 1:
            raise ValueError("n_steps must be >= 0 and n_failed >= 1")

    def replace(self, **changes) -> "QaspConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class QaspProblem:
    """Objective plus its local quadratic model.

    ``model_at(x)`` returns a :class:`QuadraticForm` in the step ``delta``
    whose constant equals ``evaluate(x)``.
    """

    n_vars: int
    evaluate: Callable[[np.ndarray], float]
    model_at: Callable[[np.ndarray], QuadraticForm]
    x_min: np.ndarray = None
    x_max: np.ndarray = None

    def __post_init__(self):
        lo = -np.inf if self.x_min is None else self.x_min
        hi = np.inf if self.x_max is None else self.x_max
        self.x_min = np.broadcast_to(np.asarray(lo, dtype=float), (self.n_vars,)).copy()
        self.x_max = np.broadcast_to(np.asarray(hi, dtype=float), (self.n_vars,)).copy()
        if np.any(self.x_min > self.x_max):
            raise ValueError("x_min exceeds x_max")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    k: int
    f: float
    epsilon_norm: float
    accepted: bool
    sampler_energy: float


@dataclass
class QaspResult:
    x_final: np.ndarray
    f_final: float
    iterations: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""
    epsilon_final: np.ndarray = None

    @property
    def n_accepted(self) -> int:
        return sum(r.accepted for r in self.iterations)


def clip_bounds(x, x_min, x_max, box_min, box_max):
    """Step bounds: the trust box intersected with the variable bounds."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x_min - x, box_min), np.minimum(x_max - x, box_max)


def clip_range(d_min, d_max, delta_min, delta_max):
    """Intersect the grid range with the step bounds.

    A range lying entirely on one side collapses onto the nearer bound.
    """
    lo = np.maximum(d_min, delta_min)
    hi = np.minimum(d_max, delta_max)
    lo = np.minimum(lo, delta_max)
    hi = np.maximum(hi, lo)
    return lo, hi


def run_qasp(
    problem: QaspProblem,
    config: QaspConfig,
    sampler,
    x0,
    *,
    seed: int = 0,
    callback: Callable[[dict], None] | None = None,
) -> QaspResult:
    """Minimise ``problem`` from ``x0``.

    ``sampler.sample(qubo, seed=...)`` is called once per iteration with a
    seed derived from ``seed`` and the iteration index. ``callback`` receives
    a dict with the iteration's encoding, model, step and acceptance.
    """
    n = problem.n_vars
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
    if np.any(x < problem.x_min) or np.any(x > problem.x_max):
        raise ValueError("x0 is outside the variable bounds")

    L = config.bits_per_var
    eps = np.broadcast_to(np.asarray(config.epsilon0, dtype=float), (n,)).copy()
    box_min = np.broadcast_to(np.asarray(config.box_min, dtype=float), (n,))
    box_max = np.broadcast_to(np.asarray(config.box_max, dtype=float), (n,))
    f = float(problem.evaluate(x))
    model = problem.model_at(x)
    result = QaspResult(x, f, epsilon_final=eps)

    k = failed = it = 0
    while k < config.n_steps and failed < config.n_failed:
        dmin_k, dmax_k = clip_bounds(x, problem.x_min, problem.x_max, box_min, box_max)
        d_min, d_max = range_from_error(eps, 0.0, L)
        d_min, d_max = clip_range(d_min, d_max, dmin_k, dmax_k)
        spec = EncodingSpec.from_range(d_min, d_max, L)
        qubo = qubo_from_quadratic(model, spec)
        best = sampler.sample(qubo, seed=derive_seed(seed, it))[0]
        delta = decode(spec, best.bits)
        x_try = np.clip(x + delta, problem.x_min, problem.x_max)
        f_try = float(problem.evaluate(x_try))
        accepted = f_try < f
        if callback is not None:
            callback(
                {"index": it, "x": x, "spec": spec, "model": model, "qubo": qubo,
                 "delta": delta, "f": f, "f_try": f_try, "accepted": accepted}
            )
        if accepted:
            x, f = x_try, f_try
            k += 1
            failed = 0
            model = problem.model_at(x)
        else:
            failed += 1
            eps = np.maximum(config.epsilon_min, config.xi * eps)
        result.iterations.append(
            IterationRecord(it, k, f, float(np.linalg.norm(eps)), accepted, best.energy + qubo.offset)
        )
        it += 1

    if k >= config.n_steps:
        reason = "n_steps"
    elif np.all(eps <= config.epsilon_min):
        reason = "converged"
    else:
        reason = "n_failed"
    log.debug("qasp stopped after %d iterations (%d accepted): %s", it, k, reason)
    result.x_final, result.f_final, result.stop_reason, result.epsilon_final = x, f, reason, eps
    return result
