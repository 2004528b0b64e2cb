"""Exact dense state engine for small atom-field registers.

A register is an ordered list of subsystems: three-level atoms with basis
order (g, e, i) and photon-number-truncated field modes with basis order
(0, 1, ..., n_max).  Flat indexing is row-major with the leftmost subsystem
as the most significant digit.  Everything here is a pure function of its
inputs; state and operator arrays are frozen read-only so values can be
shared across workers.

Tolerances: 1e-12 for exact-arithmetic identities, 1e-9 for user-supplied
input validation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class StrEnum(str, Enum):
    """String-valued enum whose str() is the value (3.11 behavior)."""

    __str__ = str.__str__

ATOL_EXACT = 1e-12
ATOL_INPUT = 1e-9
PSD_FLOOR = -1e-10

# Atomic level order is fixed as (g, e, i).
LEVEL_G = 0
LEVEL_E = 1
LEVEL_I = 2

KIND_ATOM = "atom3"
KIND_MODE = "mode"


class InvariantViolation(Exception):
    """An internal consistency check failed (exit code 3 territory)."""


def _frozen(array: np.ndarray, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SubsystemSpec:
    """One register slot: a three-level atom or a truncated field mode."""

    kind: str
    dimension: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind == KIND_ATOM:
            if self.dimension != 3:
                raise ValueError("atom3 subsystems always have dimension 3")
        elif self.kind == KIND_MODE:
            if self.dimension < 2:
                raise ValueError("mode dimension must be at least 2 (n_max >= 1)")
        else:
            raise ValueError(f"unknown subsystem kind {self.kind!r}")


def atom(label: str = "") -> SubsystemSpec:
    """Three-level atom with basis order (g, e, i)."""
    return SubsystemSpec(KIND_ATOM, 3, label)


def mode(n_max: int = 2, label: str = "") -> SubsystemSpec:
    """Field mode truncated at n_max photons, basis order (0, 1, ..., n_max)."""
    return SubsystemSpec(KIND_MODE, n_max + 1, label)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered subsystem list plus the index arithmetic between flat indices
    and per-subsystem digit tuples (row-major, leftmost most significant)."""

    subsystems: tuple[SubsystemSpec, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dimension for s in self.subsystems)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystems)

    def flat_index(self, digits: Sequence[int]) -> int:
        if len(digits) != self.n_subsystems:
            raise ValueError("digit tuple length does not match register size")
        return int(np.ravel_multi_index(tuple(digits), self.dims))

    def digits(self, flat: int) -> tuple[int, ...]:
        return tuple(int(d) for d in np.unravel_index(flat, self.dims))

    def label_of(self, index: int) -> str:
        spec = self.subsystems[index]
        return spec.label or f"s{index}"


def make_register(specs: Iterable[SubsystemSpec]) -> RegisterLayout:
    """Build a register layout from subsystem specs.

    Raises ValueError for an empty list; each spec validates its own
    dimension.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("register needs at least one subsystem")
    return RegisterLayout(specs)


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over a register."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.layout.total_dimension,):
            raise ValueError("amplitude vector length does not match layout")
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > ATOL_INPUT:
            raise ValueError(f"pure state norm {nrm} is not 1 within {ATOL_INPUT}")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(other.amplitudes, self.amplitudes))


@dataclass(frozen=True)
class DensityState:
    """Hermitian, trace-one density matrix over a register.

    Hermiticity and unit trace are checked on construction; positivity is an
    O(d^3) eigenvalue check exposed separately through :meth:`validate_psd`.
    """

    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = _frozen(self.matrix)
        d = self.layout.total_dimension
        if mat.shape != (d, d):
            raise ValueError("density matrix shape does not match layout")
        if np.max(np.abs(mat - mat.conj().T)) > ATOL_INPUT:
            raise ValueError("density matrix is not Hermitian")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > ATOL_INPUT:
            raise ValueError(f"density matrix trace {tr} is not 1")
        object.__setattr__(self, "matrix", mat)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def validate_psd(self, floor: float = PSD_FLOOR) -> None:
        lo = self.min_eigenvalue()
        if lo < floor:
            raise InvariantViolation(f"density matrix eigenvalue {lo} below {floor}")


@dataclass(frozen=True)
class LocalOperator:
    """Operator acting on an ordered subset of subsystems.

    ``matrices`` holds one matrix for a unitary, or the full Kraus set for a
    channel.  ``targets`` may be empty (unbound); bind with :meth:`on` before
    applying.  The target order fixes which tensor factor of the operator
    matrix acts on which subsystem.
    """

    kind: str  # "unitary" | "kraus_set"
    matrices: tuple[np.ndarray, ...]
    targets: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        mats = tuple(_frozen(m) for m in self.matrices)
        if not mats:
            raise ValueError("operator needs at least one matrix")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ValueError("operator matrices must be square and same-sized")
        acc = sum(m.conj().T @ m for m in mats)
        if np.max(np.abs(acc - np.eye(d))) > ATOL_EXACT:
            if self.kind == "unitary":
                raise ValueError("unitary operator fails U+U = I within 1e-12")
            raise ValueError("Kraus set fails completeness within 1e-12")
        if self.kind == "unitary" and len(mats) != 1:
            raise ValueError("a unitary operator has exactly one matrix")
        if self.kind not in ("unitary", "kraus_set"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    @classmethod
    def unitary(cls, matrix: np.ndarray, targets: Sequence[int] = ()) -> "LocalOperator":
        return cls("unitary", (np.asarray(matrix, dtype=complex),), tuple(targets))

    @classmethod
    def kraus(cls, matrices: Sequence[np.ndarray], targets: Sequence[int] = ()) -> "LocalOperator":
        return cls("kraus_set", tuple(np.asarray(m, dtype=complex) for m in matrices), tuple(targets))

    @property
    def dimension(self) -> int:
        return self.matrices[0].shape[0]

    def on(self, *targets: int) -> "LocalOperator":
        """Bind the operator to register positions (in tensor-factor order)."""
        return replace(self, targets=tuple(targets))


def _check_targets(layout: RegisterLayout, op: LocalOperator) -> tuple[int, ...]:
    targets = op.targets
    if not targets:
        raise ValueError("operator has no bound targets; use .on(...)")
    n = layout.n_subsystems
    if len(set(targets)) != len(targets):
        raise ValueError("operator targets must be distinct")
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"target index {t} out of range for {n} subsystems")
    d_loc = int(np.prod([layout.dims[t] for t in targets]))
    if d_loc != op.dimension:
        raise ValueError(
            f"operator side {op.dimension} does not match target dimensions {d_loc}"
        )
    return targets


def _apply_matrix_pure(amps: np.ndarray, dims: tuple[int, ...], matrix: np.ndarray,
                       targets: tuple[int, ...]) -> np.ndarray:
    k = len(targets)
    tensor = amps.reshape(dims)
    moved = np.moveaxis(tensor, targets, range(k))
    head = moved.shape[:k]
    flat = moved.reshape(matrix.shape[0], -1)
    out = matrix @ flat
    out = np.moveaxis(out.reshape(head + moved.shape[k:]), range(k), targets)
    return out.reshape(-1)


def _apply_channel_density(rho: np.ndarray, dims: tuple[int, ...],
                           matrices: tuple[np.ndarray, ...],
                           targets: tuple[int, ...]) -> np.ndarray:
    """Apply sum_k K rho K+ on the target subsystems.

    Works through the channel superoperator sum_k K (x) K*, applied to the
    paired (row, column) local axes in one matrix product.
    """
    n = len(dims)
    k = len(targets)
    d_loc = matrices[0].shape[0]
    super_op = sum(np.kron(m, m.conj()) for m in matrices)
    tensor = rho.reshape(dims + dims)
    row_axes = list(targets)
    col_axes = [t + n for t in targets]
    moved = np.moveaxis(tensor, row_axes + col_axes, range(2 * k))
    head = moved.shape[:2 * k]
    flat = moved.reshape(d_loc * d_loc, -1)
    out = super_op @ flat
    out = np.moveaxis(out.reshape(head + moved.shape[2 * k:]), range(2 * k),
                      row_axes + col_axes)
    return out.reshape(rho.shape)


def apply_local(state: PureState | DensityState, op: LocalOperator):
    """Apply a local operator, returning the same state kind as the input.

    Pure states accept only unitaries; density states accept unitaries (a
    single Kraus element) or full Kraus sets.
    """
    targets = _check_targets(state.layout, op)
    dims = state.layout.dims
    if isinstance(state, PureState):
        if op.kind != "unitary":
            raise ValueError("pure-state propagation needs a unitary operator")
        out = _apply_matrix_pure(state.amplitudes, dims, op.matrices[0], targets)
        return PureState(state.layout, out)
    out = _apply_channel_density(state.matrix, dims, op.matrices, targets)
    return DensityState(state.layout, out)


def product_state(layout: RegisterLayout, locals_: Sequence[np.ndarray]) -> PureState:
    """Kronecker product of one normalized local vector per subsystem."""
    if len(locals_) != layout.n_subsystems:
        raise ValueError("need exactly one local vector per subsystem")
    vecs = []
    for i, (vec, dim) in enumerate(zip(locals_, layout.dims)):
        v = np.asarray(vec, dtype=complex).reshape(-1)
        if v.shape != (dim,):
            raise ValueError(f"local vector {i} has length {v.shape[0]}, expected {dim}")
        if abs(np.linalg.norm(v) - 1.0) > ATOL_INPUT:
            raise ValueError(f"local vector {i} is not normalized within {ATOL_INPUT}")
        vecs.append(v)
    amps = vecs[0]
    for v in vecs[1:]:
        amps = np.kron(amps, v)
    return PureState(layout, amps)


def basis_state(layout: RegisterLayout, digits: Sequence[int]) -> PureState:
    amps = np.zeros(layout.total_dimension, dtype=complex)
    amps[layout.flat_index(digits)] = 1.0
    return PureState(layout, amps)


def to_density(state: PureState) -> DensityState:
    """Rank-one density matrix |psi><psi|."""
    v = state.amplitudes
    return DensityState(state.layout, np.outer(v, v.conj()))


def _keep_indices(layout: RegisterLayout, keep: Sequence[int]) -> tuple[int, ...]:
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep:
        raise ValueError("keep set must not be empty")
    for k in keep:
        if not 0 <= k < layout.n_subsystems:
            raise ValueError(f"keep index {k} out of range")
    return keep


def partial_trace(state: PureState | DensityState, keep: Sequence[int]) -> DensityState:
    """Reduced density matrix over the kept subsystems, in layout order."""
    layout = state.layout
    keep = _keep_indices(layout, keep)
    dims = layout.dims
    n = len(dims)
    kept_layout = make_register([layout.subsystems[k] for k in keep])
    d_keep = kept_layout.total_dimension

    if isinstance(state, PureState):
        tensor = state.as_tensor()
        moved = np.moveaxis(tensor, keep, range(len(keep)))
        mat = moved.reshape(d_keep, -1)
        rho = mat @ mat.conj().T
        return DensityState(kept_layout, rho)

    tensor = state.matrix.reshape(dims + dims)
    row_idx = list(range(n))
    col_idx = [i if i not in keep else i + n for i in range(n)]
    out_idx = [k for k in keep] + [k + n for k in keep]
    rho = np.einsum(tensor, row_idx + col_idx, out_idx)
    return DensityState(kept_layout, rho.reshape(d_keep, d_keep))


def fidelity_pure(rho: DensityState, psi: PureState) -> float:
    """<psi| rho |psi>, checked real within 1e-12 residue."""
    if rho.layout.total_dimension != psi.layout.total_dimension:
        raise ValueError("state dimensions do not match")
    v = psi.amplitudes
    val = complex(v.conj() @ (rho.matrix @ v))
    if abs(val.imag) > ATOL_EXACT:
        raise InvariantViolation(f"fidelity has imaginary residue {val.imag}")
    return float(val.real)


_QUBIT_SPANS = {
    "ig": (LEVEL_I, LEVEL_G),
    "ge": (LEVEL_G, LEVEL_E),
}


def qubit_reduce(rho_atom: DensityState | np.ndarray, basis: str = "ig",
                 leak_tol: float | None = ATOL_INPUT) -> tuple[np.ndarray, float]:
    """Project a single-atom density matrix onto a two-level span.

    Returns the renormalized 2x2 block (qubit order |0>, |1> follows the
    basis name, e.g. "ig" means |0> = |i>, |1> = |g>) plus the discarded
    population as leakage.  When a pure-qubit stage is expected the default
    tolerance turns leakage into an error; pass ``leak_tol=None`` to only
    report it.
    """
    if basis not in _QUBIT_SPANS:
        raise ValueError(f"unknown qubit span {basis!r}")
    mat = rho_atom.matrix if isinstance(rho_atom, DensityState) else np.asarray(rho_atom)
    if mat.shape != (3, 3):
        raise ValueError("qubit_reduce expects a single-atom 3x3 density matrix")
    a, b = _QUBIT_SPANS[basis]
    third = ({LEVEL_G, LEVEL_E, LEVEL_I} - {a, b}).pop()
    leakage = float(mat[third, third].real)
    if leak_tol is not None and leakage > leak_tol:
        raise InvariantViolation(
            f"population {leakage} outside span{{{basis}}} exceeds {leak_tol}"
        )
    block = mat[np.ix_([a, b], [a, b])]
    weight = 1.0 - leakage
    if weight <= 0.0:
        raise InvariantViolation("no population left in the qubit span")
    return block / weight, leakage


def bloch_vector(rho2: np.ndarray) -> tuple[float, float, float]:
    """Pauli expectation values (x, y, z) of a 2x2 density matrix.

    Convention: sigma_z = diag(1, -1) in the qubit order returned by
    :func:`qubit_reduce`, so |0><0| maps to (0, 0, 1).
    """
    rho2 = np.asarray(rho2)
    if rho2.shape != (2, 2):
        raise ValueError("bloch_vector expects a 2x2 matrix")
    x = float(2.0 * rho2[0, 1].real)
    y = float(-2.0 * rho2[0, 1].imag)
    z = float((rho2[0, 0] - rho2[1, 1]).real)
    r = np.sqrt(x * x + y * y + z * z)
    if r > 1.0 + 1e-10:
        raise InvariantViolation(f"Bloch vector length {r} exceeds 1")
    return (x, y, z)
