"""In-process samplers: exhaustive enumeration and simulated annealing."""
from __future__ import annotations

import numpy as np

from ..encoding import QuboProblem
from . import _kernels
from .base import Sample, SamplerConfig, derive_seed, empty_result, rank_states

MAX_EXHAUSTIVE_BITS = 24


class TooManyBitsError(ValueError):
    pass


def _index_bits(indices, n_bits):
    return ((np.asarray(indices, dtype=np.int64)[:, None] >> np.arange(n_bits)) & 1).astype(np.int8)


def exhaustive_sample(problem: QuboProblem, config: SamplerConfig | None = None) -> list[Sample]:
    """The ``num_reads`` lowest-energy states, by full enumeration."""
    config = config or SamplerConfig()
    n = problem.n_bits
    if n == 0:
        return empty_result()
    if n > MAX_EXHAUSTIVE_BITS:
        raise TooManyBitsError(f"{n} bits exceeds the exhaustive limit of {MAX_EXHAUSTIVE_BITS}")
    energies = _kernels.enumerate_energies(problem.q)
    k = min(config.num_reads, energies.size)
    kth = np.partition(energies, k - 1)[k - 1]
    # Enumeration accumulates rounding; rescore everything near the cut exactly.
    tol = 1e-9 * (np.abs(problem.q).sum() + 1.0)
    cand = np.flatnonzero(energies <= kth + tol)
    return rank_states(problem, _index_bits(cand, n), limit=k)


def simulated_annealing_sample(problem: QuboProblem, config: SamplerConfig | None = None) -> list[Sample]:
    """``num_reads`` restarts of single-flip Metropolis annealing.

    Restart ``r`` uses its own key derived from ``(seed, r)``, so results are
    independent of how restarts are scheduled.
    """
    config = config or SamplerConfig()
    if problem.n_bits == 0:
        return empty_result()
    keys = np.array([derive_seed(config.seed, r) for r in range(config.num_reads)], dtype=np.uint64)
    states = _kernels.anneal(problem.q, config.sa_sweeps, keys)
    uniq, counts = np.unique(states, axis=0, return_counts=True)
    return rank_states(problem, uniq, counts)


class ExhaustiveSampler:
    name = "exhaustive"

    def __init__(self, config: SamplerConfig | None = None):
        self.config = config or SamplerConfig()

    def sample(self, problem: QuboProblem, seed: int | None = None) -> list[Sample]:
        cfg = self.config if seed is None else self.config.with_seed(seed)
        return exhaustive_sample(problem, cfg)


class SimulatedAnnealingSampler:
    name = "sa"

    def __init__(self, config: SamplerConfig | None = None):
        self.config = config or SamplerConfig()

    def sample(self, problem: QuboProblem, seed: int | None = None) -> list[Sample]:
        cfg = self.config if seed is None else self.config.with_seed(seed)
        return simulated_annealing_sample(problem, cfg)
