"""Dense state and operator algebra over composite Hilbert spaces.

Subsystems are ordered left to right as listed in ``dims``. Every state and
operator carries its dimension list, so embeddings and partial traces never
depend on caller-side reshuffling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

TOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid subsystem dimensions {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector over ``dims``.

    ``unnormalized`` marks sub-channel outputs whose norm carries a branch
    probability; all other states must have unit norm.
    """

    dims: tuple[int, ...]
    amps: np.ndarray
    unnormalized: bool = False

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = _frozen(np.ravel(self.amps))
        if amps.size != int(np.prod(dims)):
            raise ValueError(f"amplitude vector of length {amps.size} does not match dims {dims}")
        if not self.unnormalized and abs(np.linalg.norm(amps) - 1.0) > TOL:
            raise ValueError(f"state is not normalized (norm={np.linalg.norm(amps):.3g})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "PureState":
        n = self.norm
        if n < TOL:
            raise ValueError("cannot normalize a null vector")
        return PureState(self.dims, self.amps / n)

    def density(self) -> "DensityState":
        return DensityState(self.dims, np.outer(self.amps, self.amps.conj()), self.unnormalized)

    def __repr__(self):
        return f"PureState(dims={self.dims}, amps={np.round(self.amps, 6)})"


@dataclass(frozen=True, eq=False)
class DensityState:
    """Density matrix over ``dims``; Hermitian, PSD and unit trace unless ``unnormalized``."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    unnormalized: bool = False

    def __post_init__(self):
        dims = _check_dims(self.dims)
        mat = _frozen(self.matrix)
        d = int(np.prod(dims))
        if mat.shape != (d, d):
            raise ValueError(f"matrix of shape {mat.shape} does not match dims {dims}")
        if np.max(np.abs(mat - mat.conj().T)) > TOL:
            raise ValueError("density matrix is not Hermitian")
        if np.min(np.linalg.eigvalsh(mat)) < -TOL:
            raise ValueError("density matrix is not positive semidefinite")
        if not self.unnormalized and abs(np.trace(mat).real - 1.0) > TOL:
            raise ValueError(f"density matrix trace is {np.trace(mat).real:.6g}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True, eq=False)
class Operator:
    """Square matrix acting on the space ``dims``."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    unitary: bool = field(default=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        mat = _frozen(self.matrix)
        d = int(np.prod(dims))
        if mat.shape != (d, d):
            raise ValueError(f"matrix of shape {mat.shape} does not match dims {dims}")
        if self.unitary and np.max(np.abs(mat.conj().T @ mat - np.eye(d))) > TOL:
            raise ValueError("operator flagged unitary is not unitary")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    @property
    def H(self) -> "Operator":
        return Operator(self.dims, self.matrix.conj().T, self.unitary)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")
        return Operator(self.dims, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")
        return Operator(self.dims, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "Operator":
        return Operator(self.dims, scalar * self.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.dims, -self.matrix)

    def allclose(self, other: "Operator", tol: float = TOL) -> bool:
        return self.dims == other.dims and bool(np.max(np.abs(self.matrix - other.matrix)) <= tol)

    def __repr__(self):
        return f"Operator(dims={self.dims})"


# -- constructors -----------------------------------------------------------

def ket(labels: Sequence[int] | int, dims: Sequence[int] | None = None) -> PureState:
    """Computational basis state ``|l0 l1 ...>``; qubits assumed when ``dims`` is omitted."""
    labels = (labels,) if isinstance(labels, (int, np.integer)) else tuple(labels)
    dims = _check_dims(dims if dims is not None else (2,) * len(labels))
    if len(labels) != len(dims) or any(not 0 <= l < d for l, d in zip(labels, dims)):
        raise ValueError(f"labels {labels} invalid for dims {dims}")
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[np.ravel_multi_index(labels, dims)] = 1.0
    return PureState(dims, amps)


def state(amps, dims: Sequence[int] | None = None, normalize: bool = False) -> PureState:
    amps = np.asarray(amps, dtype=complex).ravel()
    if dims is None:
        n = int(round(np.log2(amps.size)))
        if 2 ** n != amps.size:
            raise ValueError("dims required for non-qubit vectors")
        dims = (2,) * n
    if normalize:
        amps = amps / np.linalg.norm(amps)
    return PureState(tuple(dims), amps)


def operator(matrix, dims: Sequence[int] | None = None, unitary: bool = False) -> Operator:
    matrix = np.asarray(matrix, dtype=complex)
    if dims is None:
        dims = (matrix.shape[0],)
    return Operator(tuple(dims), matrix, unitary)


def identity(dims: Sequence[int]) -> Operator:
    dims = _check_dims(dims)
    return Operator(dims, np.eye(int(np.prod(dims))), unitary=True)


def projector(s: PureState) -> Operator:
    return Operator(s.dims, np.outer(s.amps, s.amps.conj()))


def random_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(tuple(dims), v / np.linalg.norm(v))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(d, random_state=rng)


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityState:
    d = int(np.prod(dims))
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return DensityState(tuple(dims), rho / np.trace(rho).real)


# -- algebra ------------------------------------------------------------------

def tensor(*items):
    """Kronecker composition of states, density matrices or operators of one kind."""
    if not items:
        raise ValueError("tensor needs at least one operand")
    kind = type(items[0])
    if any(type(x) is not kind for x in items):
        raise TypeError("tensor operands must all be the same kind")
    dims = sum((x.dims for x in items), ())
    if kind is PureState:
        return PureState(dims, reduce(np.kron, [x.amps for x in items]),
                         any(x.unnormalized for x in items))
    if kind is DensityState:
        return DensityState(dims, reduce(np.kron, [x.matrix for x in items]),
                            any(x.unnormalized for x in items))
    if kind is Operator:
        return Operator(dims, reduce(np.kron, [x.matrix for x in items]),
                        all(x.unitary for x in items))
    raise TypeError(f"cannot tensor objects of type {kind.__name__}")


def _check_targets(targets: Sequence[int], n: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target in {targets}")
    if any(not 0 <= t < n for t in targets):
        raise ValueError(f"target out of range in {targets}")
    return targets


def embed(op: Operator, targets: Sequence[int], dims: Sequence[int]) -> Operator:
    """Lift ``op`` acting on ``targets`` (in that order) to the full space ``dims``."""
    dims = _check_dims(dims)
    targets = _check_targets(targets, len(dims))
    if tuple(dims[t] for t in targets) != op.dims:
        raise ValueError(f"operator dims {op.dims} do not match targets {targets} of {dims}")
    rest = [i for i in range(len(dims)) if i not in targets]
    order = list(targets) + rest
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op.matrix, np.eye(d_rest))
    n = len(dims)
    shape = [dims[i] for i in order]
    full = full.reshape(shape + shape)
    inv = list(np.argsort(order))
    full = full.transpose(inv + [n + i for i in inv])
    d = int(np.prod(dims))
    return Operator(dims, full.reshape(d, d), op.unitary)


def apply(U: Operator, s: PureState, targets: Sequence[int] | None = None) -> PureState:
    """``U`` applied to ``s``; ``targets`` defaults to the whole space."""
    if targets is not None:
        U = embed(U, targets, s.dims)
    if U.dims != s.dims:
        raise ValueError(f"operator dims {U.dims} do not match state dims {s.dims}")
    out = U.matrix @ s.amps
    return PureState(s.dims, out, unnormalized=s.unnormalized or not U.unitary)


def inner(a: PureState, b: PureState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: PureState, b: PureState) -> float:
    """Phase-insensitive overlap ``|<a|b>|^2 / (|a|^2 |b|^2)``."""
    return abs(inner(a, b)) ** 2 / (a.norm ** 2 * b.norm ** 2)


def equal_up_to_phase(a: PureState, b: PureState, tol: float = TOL) -> bool:
    return a.dims == b.dims and fidelity(a, b) >= 1 - tol


def partial_trace(rho: DensityState | PureState, keep: Sequence[int]) -> DensityState:
    """Reduced state on the subsystems in ``keep`` (returned in ascending order)."""
    if isinstance(rho, PureState):
        rho = rho.density()
    n = len(rho.dims)
    keep = sorted(_check_targets(keep, n))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    t = np.asarray(rho.matrix).reshape(rho.dims + rho.dims)
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    kd = tuple(rho.dims[i] for i in keep)
    d = int(np.prod(kd))
    return DensityState(kd, t.reshape(d, d), rho.unnormalized)


def project(s: PureState, index: int, bra: PureState) -> PureState:
    """Contract subsystem ``index`` of ``s`` with ``<bra|`` and drop it (unnormalized)."""
    if len(s.dims) < 2:
        raise ValueError("cannot project out the only subsystem")
    if bra.dims != (s.dims[index],):
        raise ValueError(f"bra dims {bra.dims} do not match subsystem {index} of {s.dims}")
    t = np.asarray(s.amps).reshape(s.dims)
    out = np.tensordot(bra.amps.conj(), t, axes=([0], [index]))
    dims = s.dims[:index] + s.dims[index + 1:]
    return PureState(dims, out.ravel(), unnormalized=True)


def schmidt_rank(s: PureState, cut: Sequence[int], tol: float = TOL) -> tuple[int, np.ndarray]:
    """Schmidt rank of ``s`` across ``cut | rest`` and the normalized Schmidt coefficients."""
    n = len(s.dims)
    cut = _check_targets(cut, n)
    rest = [i for i in range(n) if i not in cut]
    if not cut or not rest:
        raise ValueError("cut must be a proper nonempty subset of subsystems")
    if s.norm < tol:
        raise ValueError("cannot take the Schmidt decomposition of a null vector")
    t = (np.asarray(s.amps) / s.norm).reshape(s.dims).transpose(list(cut) + rest)
    da = int(np.prod([s.dims[i] for i in cut]))
    sv = np.linalg.svd(t.reshape(da, -1), compute_uv=False)
    return int(np.sum(sv > tol)), sv


def trace_distance(rho: DensityState, sigma: DensityState) -> float:
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch {rho.dims} vs {sigma.dims}")
    ev = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(0.5 * np.sum(np.abs(ev)))


# -- common single-qubit matrices --------------------------------------------

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
