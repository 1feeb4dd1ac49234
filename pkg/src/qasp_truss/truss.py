"""Truss model, reduced stiffness assembly and the mechanical functionals.

All operations work on the reduced system: fixed degrees of freedom are
eliminated, so ``K(alpha)`` stays symmetric positive definite for any
``alpha > 0`` on an adequately supported structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

MIN_BAR_LENGTH = 1e-12


class TrussError(ValueError):
    """Invalid truss model."""


class DegenerateBarError(TrussError):
    pass


class UnderConstrainedError(RuntimeError):
    """Raised when K(alpha) is singular or indefinite."""

    def __init__(self, msg="structure under-constrained"):
        super().__init__(msg)


@dataclass(frozen=True)
class Bar:
    i: int
    j: int
    area0: float
    E: float


@dataclass(frozen=True)
class TrussModel:
    """Immutable geometry, material, supports and loads.

    ``loads`` is the full nodal force vector over ``dimension * n_nodes`` DOFs;
    DOF ``dimension * node + axis``.
    """

    dimension: int
    nodes: np.ndarray
    bars: tuple[Bar, ...]
    supports: frozenset[tuple[int, int]]
    loads: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if self.dimension not in (2, 3):
            raise TrussError(f"dimension must be 2 or 3, got {self.dimension}")
        if nodes.ndim != 2 or nodes.shape[1] != self.dimension:
            raise TrussError(f"nodes must have shape (M, {self.dimension}), got {nodes.shape}")
        n_nodes = nodes.shape[0]
        for k, bar in enumerate(self.bars):
            if not (0 <= bar.i < n_nodes and 0 <= bar.j < n_nodes):
                raise TrussError(f"bar {k}: node index out of range")
            if bar.i == bar.j:
                raise DegenerateBarError(f"bar {k}: connects node {bar.i} to itself")
            if not (bar.area0 > 0 and bar.E > 0):
                raise TrussError(f"bar {k}: area0 and E must be positive")
            if np.linalg.norm(nodes[bar.j] - nodes[bar.i]) < MIN_BAR_LENGTH:
                raise DegenerateBarError(f"bar {k}: coincident endpoints")
        for node, axis in self.supports:
            if not (0 <= node < n_nodes and 0 <= axis < self.dimension):
                raise TrussError(f"support ({node}, {axis}) out of range")
        loads = np.asarray(self.loads, dtype=float)
        if loads.shape != (self.dimension * n_nodes,):
            raise TrussError(f"loads must have length {self.dimension * n_nodes}")
        fixed = [self.dimension * n + a for n, a in self.supports]
        if np.any(loads[fixed] != 0.0):
            raise TrussError("loads applied on fixed DOFs")
        nodes.setflags(write=False)
        loads.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "bars", tuple(self.bars))
        object.__setattr__(self, "supports", frozenset(self.supports))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_bars(self) -> int:
        return len(self.bars)

    @property
    def n_dofs(self) -> int:
        return self.dimension * self.n_nodes

    def lengths(self) -> np.ndarray:
        return np.array([bar_geometry(self, k)[0] for k in range(self.n_bars)])

    def areas0(self) -> np.ndarray:
        return np.array([b.area0 for b in self.bars])


@dataclass(frozen=True)
class DofMap:
    free_dofs: np.ndarray
    full_to_reduced: np.ndarray  # -1 marks a fixed DOF

    @classmethod
    def from_model(cls, model: TrussModel) -> "DofMap":
        fixed = {model.dimension * n + a for n, a in model.supports}
        free = np.array([d for d in range(model.n_dofs) if d not in fixed], dtype=np.int64)
        f2r = np.full(model.n_dofs, -1, dtype=np.int64)
        f2r[free] = np.arange(free.size)
        return cls(free, f2r)

    @property
    def n_free(self) -> int:
        return int(self.free_dofs.size)

    def reduce(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full, dtype=float)[self.free_dofs]

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        out = np.zeros(self.full_to_reduced.size)
        out[self.free_dofs] = reduced
        return out


@dataclass
class DesignVector:
    alpha: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        n = self.alpha.size
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(self.lower <= 0):
            raise ValueError("alpha lower bound must be positive")
        if np.any(self.lower > self.upper):
            raise ValueError("alpha lower bound exceeds upper bound")
        tol = 1e-12
        if np.any(self.alpha < self.lower - tol) or np.any(self.alpha > self.upper + tol):
            raise ValueError("alpha outside its bounds")

    def with_alpha(self, alpha) -> "DesignVector":
        return DesignVector(np.clip(alpha, self.lower, self.upper), self.lower, self.upper)


@dataclass(frozen=True)
class UnitStiffnessSet:
    """Per-bar stiffness ``K_k`` scattered into the reduced system (sparse)."""

    k_units: tuple[sp.csr_matrix, ...]
    n_free: int

    def __len__(self):
        return len(self.k_units)

    def stacked(self) -> np.ndarray:
        """Dense ``(N, n, n)`` array; cached on first use."""
        cached = self.__dict__.get("_stacked")
        if cached is None:
            cached = np.array([k.toarray() for k in self.k_units]).reshape(
                len(self.k_units), self.n_free, self.n_free
            )
            object.__setattr__(self, "_stacked", cached)
        return cached


def bar_geometry(model: TrussModel, k: int) -> tuple[float, np.ndarray]:
    """Length and unit direction (node_i -> node_j) of bar ``k``."""
    if not 0 <= k < model.n_bars:
        raise IndexError(f"bar index {k} out of range")
    bar = model.bars[k]
    d = model.nodes[bar.j] - model.nodes[bar.i]
    length = float(np.linalg.norm(d))
    if length < MIN_BAR_LENGTH:
        raise DegenerateBarError(f"bar {k}: coincident endpoints")
    return length, d / length


def element_stiffness0(model: TrussModel, k: int) -> np.ndarray:
    """Axial element stiffness ``(E A0 / L) [[nn', -nn'], [-nn', nn']]``."""
    length, n = bar_geometry(model, k)
    bar = model.bars[k]
    nn = np.outer(n, n)
    return bar.E * bar.area0 / length * np.block([[nn, -nn], [-nn, nn]])


def _element_dofs(model: TrussModel, k: int) -> np.ndarray:
    d = model.dimension
    bar = model.bars[k]
    return np.concatenate([d * bar.i + np.arange(d), d * bar.j + np.arange(d)])


def assemble_unit_stiffness(model: TrussModel, dofs: DofMap | None = None) -> UnitStiffnessSet:
    dofs = dofs or DofMap.from_model(model)
    n = dofs.n_free
    units = []
    for k in range(model.n_bars):
        ke = element_stiffness0(model, k)
        red = dofs.full_to_reduced[_element_dofs(model, k)]
        keep = red >= 0
        rows, cols = np.meshgrid(red[keep], red[keep], indexing="ij")
        vals = ke[np.ix_(keep, keep)]
        units.append(sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr())
    return UnitStiffnessSet(tuple(units), n)


def _check_alpha(units: UnitStiffnessSet, alpha) -> np.ndarray:
    alpha = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
    if alpha.shape != (len(units),):
        raise ValueError(f"design has length {alpha.size}, expected {len(units)}")
    return alpha


def global_stiffness(units: UnitStiffnessSet, design) -> np.ndarray:
    """Dense ``K(alpha) = sum_k alpha_k K_k``."""
    alpha = _check_alpha(units, design)
    if len(units) == 0:
        return np.zeros((units.n_free, units.n_free))
    return np.tensordot(alpha, units.stacked(), axes=1)


def _check_state(units: UnitStiffnessSet, *vectors):
    for v in vectors:
        if np.shape(v) != (units.n_free,):
            raise ValueError(f"vector has shape {np.shape(v)}, expected ({units.n_free},)")


def potential_energy(units: UnitStiffnessSet, design, u, f) -> float:
    """``Psi(U) = 1/2 U'KU - F'U``."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_state(units, u, f)
    k = global_stiffness(units, design)
    return float(0.5 * u @ k @ u - f @ u)


def potential_gradient(units: UnitStiffnessSet, design, u, f) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_state(units, u, f)
    return global_stiffness(units, design) @ u - f


def direct_solve(units: UnitStiffnessSet, design, f) -> np.ndarray:
    """Displacements ``K^-1 F`` by Cholesky; the verification oracle."""
    f = np.asarray(f, dtype=float)
    _check_state(units, f)
    k = global_stiffness(units, design)
    if k.size == 0:
        return np.zeros(0)
    try:
        factor = scipy.linalg.cho_factor(k)
    except np.linalg.LinAlgError as exc:
        raise UnderConstrainedError() from exc
    # Cholesky succeeds on nearly singular K; catch mechanisms by conditioning.
    diag = np.diag(factor[0])
    if diag.min() <= 1e-7 * diag.max():
        raise UnderConstrainedError()
    return scipy.linalg.cho_solve(factor, f)


def compliance(f, u) -> float:
    return float(np.dot(f, u))


def compliance_sensitivity(units: UnitStiffnessSet, u) -> np.ndarray:
    """``omega_i = -U' K_i U`` for every bar."""
    u = np.asarray(u, dtype=float)
    _check_state(units, u)
    if len(units) == 0:
        return np.zeros(0)
    return -np.einsum("i,kij,j->k", u, units.stacked(), u)


def volume(model: TrussModel, design) -> float:
    alpha = np.asarray(getattr(design, "alpha", design), dtype=float)
    return float(alpha @ volume_gradient(model))


def volume_gradient(model: TrussModel) -> np.ndarray:
    """``D_k = L_k A0_k``; constant in alpha."""
    return model.lengths() * model.areas0()


def make_model(
    nodes: Sequence[Sequence[float]],
    bars: Sequence[tuple],
    supports: Sequence[tuple[int, int]],
    loads: Sequence[tuple[int, int, float]] = (),
    *,
    area0: float = 0.5,
    E: float = 200e9,
    name: str = "",
) -> TrussModel:
    """Convenience constructor.

    ``bars`` items are ``(i, j)`` or ``(i, j, area0, E)``; ``loads`` are
    ``(node, axis, value)`` triples.
    """
    nodes = np.asarray(nodes, dtype=float)
    d = nodes.shape[1]
    bar_objs = []
    for b in bars:
        if len(b) == 2:
            bar_objs.append(Bar(int(b[0]), int(b[1]), float(area0), float(E)))
        else:
            bar_objs.append(Bar(int(b[0]), int(b[1]), float(b[2]), float(b[3])))
    f = np.zeros(d * nodes.shape[0])
    for node, axis, value in loads:
        f[d * node + axis] += value
    return TrussModel(d, nodes, tuple(bar_objs), frozenset((int(n), int(a)) for n, a in supports), f, name=name)


class TrussSystem:
    """Model plus its DOF map, unit stiffnesses and reduced load, built once."""

    def __init__(self, model: TrussModel):
        self.model = model
        self.dofs = DofMap.from_model(model)
        self.units = assemble_unit_stiffness(model, self.dofs)
        self.f = self.dofs.reduce(model.loads)
        self.d = volume_gradient(model)

    def stiffness(self, alpha) -> np.ndarray:
        return global_stiffness(self.units, alpha)

    def solve(self, alpha) -> np.ndarray:
        return direct_solve(self.units, alpha, self.f)

    def compliance(self, alpha) -> float:
        return compliance(self.f, self.solve(alpha))

    def volume(self, alpha) -> float:
        return float(np.dot(np.asarray(getattr(alpha, "alpha", alpha)), self.d))
