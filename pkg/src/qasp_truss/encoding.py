"""Continuous <-> binary encoding and QUBO construction.

Bit layout is variable-major and little-endian within a variable: bit
``i * L + j`` carries weight ``2**j`` of the ``i``-th active variable.
Variables with a zero-width range are frozen at ``d_min`` and get no bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadform import QuadraticForm


@dataclass(frozen=True)
class EncodingSpec:
    bits_per_var: int
    epsilon: np.ndarray
    center: np.ndarray
    d_min: np.ndarray
    d_max: np.ndarray

    def __post_init__(self):
        if self.bits_per_var < 1:
            raise ValueError("bits_per_var must be >= 1")
        for name in ("epsilon", "center", "d_min", "d_max"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if np.any(self.epsilon < 0):
            raise ValueError("epsilon must be non-negative")
        if np.any(self.d_min > self.d_max):
            raise ValueError("d_min exceeds d_max")

    @classmethod
    def from_range(cls, d_min, d_max, bits_per_var: int) -> "EncodingSpec":
        d_min = np.atleast_1d(np.asarray(d_min, dtype=float))
        d_max = np.atleast_1d(np.asarray(d_max, dtype=float))
        eps, center = error_from_range(d_min, d_max, bits_per_var)
        return cls(bits_per_var, eps, center, d_min, d_max)

    @classmethod
    def from_error(cls, epsilon, center, bits_per_var: int) -> "EncodingSpec":
        epsilon = np.atleast_1d(np.asarray(epsilon, dtype=float))
        center = np.broadcast_to(np.asarray(center, dtype=float), epsilon.shape)
        d_min, d_max = range_from_error(epsilon, center, bits_per_var)
        return cls(bits_per_var, epsilon, center, d_min, d_max)

    @property
    def n_vars(self) -> int:
        return self.epsilon.size

    @property
    def beta(self) -> np.ndarray:
        return 2.0 ** np.arange(self.bits_per_var)

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.epsilon > 0)

    @property
    def n_bits(self) -> int:
        return self.active.size * self.bits_per_var

    def transform(self) -> np.ndarray:
        """``V`` restricted to active variables: ``delta = d_min + V b``."""
        act = self.active
        v = np.zeros((self.n_vars, self.n_bits))
        beta = self.beta
        for col, i in enumerate(act):
            v[i, col * self.bits_per_var : (col + 1) * self.bits_per_var] = self.epsilon[i] * beta
        return v


def error_from_range(d_min, d_max, bits_per_var: int):
    """Grid spacing and centre for the range ``[d_min, d_max]``."""
    d_min = np.asarray(d_min, dtype=float)
    d_max = np.asarray(d_max, dtype=float)
    if np.any(d_min > d_max):
        raise ValueError("inverted range")
    eps = (d_max - d_min) / (2**bits_per_var - 1)
    center = (d_max + d_min - eps) / 2
    return eps, center


def range_from_error(epsilon, center, bits_per_var: int):
    epsilon = np.asarray(epsilon, dtype=float)
    center = np.asarray(center, dtype=float)
    if np.any(epsilon < 0):
        raise ValueError("epsilon must be non-negative")
    half = 2 ** (bits_per_var - 1)
    return center - (half - 1) * epsilon, center + half * epsilon


def decode(spec: EncodingSpec, bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=float).ravel()
    if bits.size != spec.n_bits:
        raise ValueError(f"expected {spec.n_bits} bits, got {bits.size}")
    delta = spec.d_min.copy()
    if bits.size:
        counts = bits.reshape(-1, spec.bits_per_var) @ spec.beta
        act = spec.active
        delta[act] += spec.epsilon[act] * counts
    # Rounding can overshoot the upper end by one ulp.
    return np.minimum(delta, spec.d_max)


@dataclass(frozen=True)
class QuboProblem:
    """``E(b) = offset + sum_{i<=j} q[i, j] b_i b_j``; ``q`` upper triangular."""

    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float)) if np.size(self.q) else np.zeros((0, 0))
        if q.shape[0] != q.shape[1]:
            raise ValueError("QUBO matrix must be square")
        if np.any(np.tril(q, -1) != 0):
            raise ValueError("QUBO matrix must be upper triangular")
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n_bits(self) -> int:
        return self.q.shape[0]

    @classmethod
    def from_matrix(cls, m, offset: float = 0.0) -> "QuboProblem":
        """Fold an arbitrary square matrix onto the upper triangle."""
        m = np.atleast_2d(np.asarray(m, dtype=float))
        return cls(np.triu(m) + np.triu(m.T, 1), offset)

    @classmethod
    def from_triplets(cls, n_bits: int, triplets, offset: float = 0.0) -> "QuboProblem":
        q = np.zeros((n_bits, n_bits))
        for i, j, v in triplets:
            i, j = int(i), int(j)
            if not (0 <= i < n_bits and 0 <= j < n_bits):
                raise ValueError(f"index ({i}, {j}) out of range")
            if i > j:
                i, j = j, i
            q[i, j] += float(v)
        return cls(q, offset)

    def triplets(self) -> list[list]:
        i, j = np.nonzero(self.q)
        return [[int(a), int(b), float(self.q[a, b])] for a, b in zip(i, j)]

    def energy(self, bits) -> float:
        """``b'Qb`` without the offset."""
        b = np.asarray(bits, dtype=float)
        return float(b @ self.q @ b)

    def energies(self, bit_rows) -> np.ndarray:
        b = np.asarray(bit_rows, dtype=float)
        return np.einsum("ri,ij,rj->r", b, self.q, b)


def qubo_from_quadratic(form: QuadraticForm, spec: EncodingSpec) -> QuboProblem:
    """QUBO whose energy plus offset equals ``form.evaluate(decode(spec, b))``."""
    if form.n_vars != spec.n_vars:
        raise ValueError(f"form has {form.n_vars} variables, encoding has {spec.n_vars}")
    a, g, dmin = form.hessian, form.gradient, spec.d_min
    v = spec.transform()
    full = v.T @ a @ v
    full[np.diag_indices_from(full)] += v.T @ (g + 2 * a @ dmin)
    offset = form.constant + dmin @ g + dmin @ a @ dmin
    return QuboProblem.from_matrix(full, offset)


@dataclass(frozen=True)
class IsingProblem:
    """``E(s) = offset + h's + sum_{i<j} J_ij s_i s_j`` over ``s in {-1, 1}``."""

    h: np.ndarray
    J: dict
    offset: float

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        e = self.offset + self.h @ s
        for (i, j), v in self.J.items():
            e += v * s[i] * s[j]
        return float(e)


def qubo_to_ising(problem: QuboProblem) -> IsingProblem:
    q = problem.q
    diag = np.diag(q).copy()
    upper = np.triu(q, 1)
    h = diag / 2 + (upper.sum(axis=1) + upper.sum(axis=0)) / 4
    J = {(int(i), int(j)): float(upper[i, j]) / 4 for i, j in zip(*np.nonzero(upper))}
    offset = problem.offset + diag.sum() / 2 + upper.sum() / 4
    return IsingProblem(h, J, float(offset))
