from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoding import QuboProblem


@dataclass(frozen=True)
class Sample:
    bits: np.ndarray
    energy: float
    occurrences: int = 1

    def __post_init__(self):
        bits = self.bits
        if not (isinstance(bits, np.ndarray) and bits.dtype == np.int8 and bits.ndim == 1):
            bits = np.asarray(bits, dtype=np.int8).ravel()
            object.__setattr__(self, "bits", bits)
        if self.occurrences < 1:
            raise ValueError("occurrences must be positive")

    def as_dict(self) -> dict:
        return {"bits": [int(b) for b in self.bits], "energy": self.energy, "occurrences": self.occurrences}


@dataclass(frozen=True)
class SamplerConfig:
    num_reads: int = 200
    seed: int = 0
    sa_sweeps: int = 1000
    timeout: float = 30.0
    retries: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sa_sweeps < 1:
            raise ValueError("sa_sweeps must be >= 1")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return SamplerConfig(self.num_reads, int(seed), self.sa_sweeps, self.timeout, self.retries)


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of ``base`` for the given keys."""
    state = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)]).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)


def rank_states(problem: QuboProblem, states, counts=None, limit=None) -> list[Sample]:
    """Samples for distinct ``states`` sorted by energy, ties by lexicographic bits.

    Energies are recomputed directly as ``b'Qb``; at most ``limit`` are returned.
    """
    states = np.array(states, dtype=np.int8).reshape(-1, problem.n_bits)
    states.setflags(write=False)
    if counts is None:
        counts = np.ones(len(states), dtype=np.int64)
    energies = problem.energies(states).tolist()
    # lexsort: last key is primary.
    order = np.lexsort(tuple(states[:, j] for j in range(problem.n_bits - 1, -1, -1)) + (energies,))
    counts = counts.tolist()
    return [Sample(states[k], energies[k], counts[k]) for k in order[:limit]]


def empty_result() -> list[Sample]:
    return [Sample(np.zeros(0, dtype=np.int8), 0.0, 1)]
