"""Pointer meters and the impulsive coupling ``exp(-i g Omega (x) P)``.

Two meter families are supported:

* ``GaussianMeter`` -- superpositions of Gaussian wavepackets of common width
  ``Delta`` (``psi(q) ~ exp(-(q-c)^2 / (4 Delta^2))``, so ``Var Q = Delta^2``).
  Each component may also carry a momentum offset ``k``; that is what a
  position-dependent phase ``exp(i theta Q)`` produces. All inner products and
  moments use closed forms, never a sampled grid.
* ``DiscreteMeter`` -- a finite set of exactly orthogonal pointer positions.

Coupling shifts the pointer by ``+g * lambda_k`` on the eigenspace of
``lambda_k``, i.e. translation by ``a`` maps ``|q=c>`` to ``|q=c+a>``.

A system coupled to a meter is held as a ``JointState``: a list of terms
``|v_j> (x) |e_j>`` where ``v_j`` are unnormalized system vectors and ``e_j``
are pointer basis functions (a Gaussian at ``(c_j, k_j)`` or a discrete
position ``c_j``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import erf

from .observable import SpectralDecomposition
from .qstate import TOL, DensityState, Operator, PureState, embed

STRONG_OVERLAP = 1e-6
WEAK_OVERLAP = 0.999
_POS_TOL = 1e-9
_DROP = 1e-14


class MeterRangeError(ValueError):
    """A discrete pointer was shifted outside its position set."""


def _phi(z):
    """Standard normal CDF, analytically continued to complex arguments."""
    return 0.5 * (1.0 + erf(np.asarray(z) / np.sqrt(2.0)))


@dataclass(frozen=True, eq=False)
class GaussianMeter:
    width: float
    amps: np.ndarray
    centers: np.ndarray
    kicks: np.ndarray | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("Gaussian meter width must be positive")
        amps = np.atleast_1d(np.asarray(self.amps, dtype=complex))
        centers = np.atleast_1d(np.asarray(self.centers, dtype=float))
        kicks = np.zeros_like(centers) if self.kicks is None else np.atleast_1d(np.asarray(self.kicks, float))
        if not amps.shape == centers.shape == kicks.shape or amps.ndim != 1:
            raise ValueError("amplitudes, centers and kicks must be equal-length vectors")
        for name, arr in (("amps", amps), ("centers", centers), ("kicks", kicks)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "width", float(self.width))
        n = self.norm()
        if abs(n - 1.0) > TOL:
            raise ValueError(f"meter state is not normalized (norm={n:.6g})")

    @classmethod
    def at(cls, center: float = 0.0, width: float = 1.0) -> "GaussianMeter":
        return cls(width, [1.0], [center])

    @classmethod
    def superposition(cls, components: Sequence[tuple[complex, float]], width: float) -> "GaussianMeter":
        """Normalized ``sum_j a_j |q=c_j>`` from ``(a_j, c_j)`` pairs."""
        amps = np.array([a for a, _ in components], dtype=complex)
        centers = np.array([c for _, c in components], dtype=float)
        n2 = np.real(amps.conj() @ _gauss_gram(centers, 0 * centers, centers, 0 * centers, width) @ amps)
        return cls(width, amps / np.sqrt(n2), centers)

    @property
    def components(self) -> list[tuple[complex, float]]:
        return list(zip(self.amps.tolist(), self.centers.tolist()))

    def norm(self) -> float:
        G = self.gram(self.centers, self.kicks, self.centers, self.kicks)
        return float(np.sqrt(np.real(self.amps.conj() @ G @ self.amps)))

    # pointer-basis kernels; these depend only on the width
    def gram(self, c1, k1, c2, k2) -> np.ndarray:
        return _gauss_gram(c1, k1, c2, k2, self.width)

    def q_elements(self, c1, k1, c2, k2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``<e_i|Q|e_j>``, ``<e_i|Q^2|e_j>`` and ``<e_i|P|e_j>`` matrices."""
        G, mu = _gauss_gram(c1, k1, c2, k2, self.width, with_mean=True)
        d2 = self.width ** 2
        q = G * mu
        q2 = G * (mu ** 2 + d2)
        p = G * (np.asarray(k2)[None, :] + 1j * (mu - np.asarray(c2)[None, :]) / (2 * d2))
        return q, q2, p

    def region_gram(self, c1, k1, c2, k2, lo: float, hi: float) -> np.ndarray:
        """``int_lo^hi conj(e_i(q)) e_j(q) dq``."""
        G, mu = _gauss_gram(c1, k1, c2, k2, self.width, with_mean=True)
        upper = 1.0 if hi == np.inf else _phi((hi - mu) / self.width)
        lower = 0.0 if lo == -np.inf else _phi((lo - mu) / self.width)
        return G * (upper - lower)

    def basis_translate(self, centers, a):
        return np.asarray(centers, float) + a

    def basis_reflect(self, centers, kicks, about):
        return 2 * about - np.asarray(centers, float), -np.asarray(kicks, float)

    def basis_position_phase(self, centers, kicks, theta):
        """``exp(i theta Q)`` on pointer basis elements: returns (phases, new kicks)."""
        centers = np.asarray(centers, float)
        return np.exp(1j * theta * centers), np.asarray(kicks, float) + theta

    def with_terms(self, amps, centers, kicks) -> "GaussianMeter":
        return GaussianMeter(self.width, amps, centers, kicks)

    def wavefunction(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, float)[:, None]
        d2 = self.width ** 2
        basis = (2 * np.pi * d2) ** -0.25 * np.exp(
            -((q - self.centers) ** 2) / (4 * d2) + 1j * self.kicks * (q - self.centers))
        return basis @ self.amps


def _gauss_gram(c1, k1, c2, k2, width, with_mean=False):
    c1 = np.asarray(c1, float)[:, None]
    k1 = np.asarray(k1, float)[:, None]
    c2 = np.asarray(c2, float)[None, :]
    k2 = np.asarray(k2, float)[None, :]
    d2 = width ** 2
    m = 0.5 * (c1 + c2)
    kappa = k2 - k1
    G = np.exp(-((c1 - c2) ** 2) / (8 * d2) + 1j * kappa * m - 0.5 * kappa ** 2 * d2
               + 1j * (k1 * c1 - k2 * c2))
    if with_mean:
        return G, m + 1j * kappa * d2
    return G


@dataclass(frozen=True, eq=False)
class DiscreteMeter:
    positions: tuple[float, ...]
    amps: np.ndarray
    cyclic: bool = False

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        if len(set(pos)) != len(pos):
            raise ValueError("discrete meter positions must be distinct")
        amps = np.asarray(self.amps, dtype=complex).ravel()
        if amps.size != len(pos):
            raise ValueError("one amplitude per position required")
        if abs(np.linalg.norm(amps) - 1.0) > TOL:
            raise ValueError("meter state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "amps", amps)
        if self.cyclic:
            steps = np.diff(sorted(pos))
            if len(pos) > 1 and np.ptp(steps) > _POS_TOL * max(1.0, abs(steps[0])):
                raise ValueError("cyclic discrete meters need evenly spaced positions")

    @classmethod
    def at(cls, position: float, positions: Sequence[float], cyclic: bool = False) -> "DiscreteMeter":
        positions = tuple(float(p) for p in positions)
        amps = np.zeros(len(positions), dtype=complex)
        amps[_index_of(positions, position)] = 1.0
        return cls(positions, amps, cyclic)

    @property
    def centers(self) -> np.ndarray:
        return np.array(self.positions)

    @property
    def kicks(self) -> np.ndarray:
        return np.zeros(len(self.positions))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def gram(self, c1, k1, c2, k2) -> np.ndarray:
        c1 = np.asarray(c1, float)[:, None]
        c2 = np.asarray(c2, float)[None, :]
        return (np.abs(c1 - c2) <= _POS_TOL).astype(complex)

    def q_elements(self, c1, k1, c2, k2):
        G = self.gram(c1, k1, c2, k2)
        c = np.asarray(c2, float)[None, :]
        return G * c, G * c ** 2, None

    def region_gram(self, c1, k1, c2, k2, lo, hi):
        c = np.asarray(c2, float)[None, :]
        return self.gram(c1, k1, c2, k2) * ((c >= lo) & (c <= hi))

    def _snap(self, x: float) -> float:
        pos = np.array(self.positions)
        if self.cyclic and len(pos) > 1:
            p0 = pos.min()
            period = len(pos) * (np.ptp(pos) / (len(pos) - 1))
            x = (x - p0) % period + p0
            if abs(x - p0 - period) <= _POS_TOL:
                x = p0
        return self.positions[_index_of(self.positions, x)]

    def basis_translate(self, centers, a):
        return np.array([self._snap(c + a) for c in np.asarray(centers, float)])

    def basis_reflect(self, centers, kicks, about):
        return np.array([self._snap(2 * about - c) for c in np.asarray(centers, float)]), np.asarray(kicks)

    def basis_position_phase(self, centers, kicks, theta):
        return np.exp(1j * theta * np.asarray(centers, float)), np.asarray(kicks)

    def with_terms(self, amps, centers, kicks) -> "DiscreteMeter":
        out = np.zeros(len(self.positions), dtype=complex)
        for a, c in zip(amps, centers):
            out[_index_of(self.positions, c)] += a
        return DiscreteMeter(self.positions, out, self.cyclic)


def _index_of(positions, x) -> int:
    for i, p in enumerate(positions):
        if abs(p - x) <= _POS_TOL * max(1.0, abs(x)):
            return i
    raise MeterRangeError(f"pointer position {x:.6g} is not in the discrete position set")


Meter = Union[GaussianMeter, DiscreteMeter]


def translate(m: Meter, a: float) -> Meter:
    """Shift every pointer component by ``+a``."""
    keep = np.abs(m.amps) > 0
    return m.with_terms(m.amps[keep], m.basis_translate(m.centers[keep], a), m.kicks[keep])


def overlap(m1: Meter, m2: Meter) -> complex:
    if type(m1) is not type(m2):
        raise TypeError("cannot take the overlap of different meter kinds")
    if isinstance(m1, GaussianMeter) and m1.width != m2.width:
        raise ValueError("Gaussian meters of different widths")
    if isinstance(m1, DiscreteMeter) and m1.positions != m2.positions:
        raise ValueError("discrete meters over different position sets")
    G = m1.gram(m1.centers, m1.kicks, m2.centers, m2.kicks)
    return complex(m1.amps.conj() @ G @ m2.amps)


def classify_strength(shifts: Sequence[float], width: float) -> str:
    """'strong', 'weak' or 'intermediate' from overlaps of adjacent shifted Gaussians."""
    s = np.unique(np.round(np.asarray(shifts, float), 12))
    if len(s) < 2:
        return "trivial"
    gaps = np.diff(s)
    ov = np.exp(-(gaps ** 2) / (8 * width ** 2))
    if ov.max() <= STRONG_OVERLAP:
        return "strong"
    if ov.min() >= WEAK_OVERLAP:
        return "weak"
    return "intermediate"


# -- joint system (x) meter states --------------------------------------------

@dataclass(frozen=True, eq=False)
class JointState:
    """``sum_j |v_j> (x) |e_j>`` over system ``dims`` and the pointer family of ``meter``."""

    dims: tuple[int, ...]
    vectors: np.ndarray
    centers: np.ndarray
    kicks: np.ndarray
    meter: Meter

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        d = int(np.prod(self.dims))
        if vecs.shape[1] != d:
            raise ValueError(f"system vectors of length {vecs.shape[1]} do not match dims {self.dims}")
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "centers", np.asarray(self.centers, float))
        object.__setattr__(self, "kicks", np.asarray(self.kicks, float))

    @classmethod
    def product(cls, s: PureState, m: Meter) -> "JointState":
        keep = np.abs(m.amps) > 0
        vecs = m.amps[keep, None] * s.amps[None, :]
        return cls(s.dims, vecs, m.centers[keep], m.kicks[keep], m)

    def _gram(self, other: "JointState | None" = None) -> np.ndarray:
        o = self if other is None else other
        return self.meter.gram(self.centers, self.kicks, o.centers, o.kicks)

    def _compact(self) -> "JointState":
        keys = {}
        for j, (c, k) in enumerate(zip(np.round(self.centers, 12), np.round(self.kicks, 12))):
            keys.setdefault((c + 0.0, k + 0.0), []).append(j)
        if len(keys) == len(self.centers):
            return self
        idx = [v[0] for v in keys.values()]
        vecs = np.array([self.vectors[v].sum(axis=0) for v in keys.values()])
        return JointState(self.dims, vecs, self.centers[idx], self.kicks[idx], self.meter)

    def inner(self, other: "JointState") -> complex:
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")
        return complex(np.sum((self.vectors.conj() @ other.vectors.T) * self._gram(other)))

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def normalized(self) -> "JointState":
        n = self.norm
        if n < TOL:
            raise ValueError("cannot normalize a null joint state")
        return JointState(self.dims, self.vectors / n, self.centers, self.kicks, self.meter)

    def fidelity(self, other: "JointState") -> float:
        return abs(self.inner(other)) ** 2 / (self.norm ** 2 * other.norm ** 2)

    def scaled(self, factor: complex) -> "JointState":
        return JointState(self.dims, factor * self.vectors, self.centers, self.kicks, self.meter)

    def apply(self, U: Operator, targets: Sequence[int] | None = None) -> "JointState":
        """System operator ``U`` (x) 1 on the meter."""
        if targets is not None:
            U = embed(U, targets, self.dims)
        if U.dims != self.dims:
            raise ValueError(f"operator dims {U.dims} do not match {self.dims}")
        return JointState(self.dims, self.vectors @ U.matrix.T, self.centers, self.kicks, self.meter)

    def project(self, index: int, bra: PureState) -> "JointState":
        """Contract system subsystem ``index`` with ``<bra|`` and drop it."""
        if bra.dims != (self.dims[index],):
            raise ValueError(f"bra dims {bra.dims} do not match subsystem {index} of {self.dims}")
        t = self.vectors.reshape((-1,) + self.dims)
        out = np.tensordot(t, bra.amps.conj(), axes=([index + 1], [0]))
        dims = self.dims[:index] + self.dims[index + 1:]
        return JointState(dims, out.reshape(len(self.centers), -1), self.centers, self.kicks, self.meter)

    def couple(self, spec: SpectralDecomposition, g: float, targets: Sequence[int] | None = None) -> "JointState":
        if targets is not None:
            spec = spec.embedded(targets, self.dims)
        if spec.dims != self.dims:
            raise ValueError(f"observable dims {spec.dims} do not match {self.dims}")
        vecs, cs, ks = [], [], []
        scale = np.max(np.abs(self.vectors)) if self.vectors.size else 0.0
        for lam, proj in zip(spec.eigenvalues, spec.projectors):
            v = self.vectors @ proj.matrix.T
            # branches with no weight are not translated (discrete pointers could leave their range)
            live = np.max(np.abs(v), axis=1) > _DROP * scale
            if not live.any():
                continue
            vecs.append(v[live])
            cs.append(self.meter.basis_translate(self.centers[live], g * lam))
            ks.append(self.kicks[live])
        if not vecs:
            return JointState(self.dims, np.zeros((1, self.vectors.shape[1])), self.centers[:1], self.kicks[:1], self.meter)
        return JointState(self.dims, np.vstack(vecs), np.concatenate(cs), np.concatenate(ks), self.meter)._compact()

    def position_phase(self, spec: SpectralDecomposition, theta: float,
                       targets: Sequence[int] | None = None) -> "JointState":
        """``exp(i theta Omega (x) Q)``; the counterpart of ``couple`` with Q in place of P."""
        if targets is not None:
            spec = spec.embedded(targets, self.dims)
        vecs, cs, ks = [], [], []
        for lam, proj in zip(spec.eigenvalues, spec.projectors):
            phases, kicks = self.meter.basis_position_phase(self.centers, self.kicks, theta * lam)
            vecs.append(phases[:, None] * (self.vectors @ proj.matrix.T))
            cs.append(self.centers)
            ks.append(kicks)
        return JointState(self.dims, np.vstack(vecs), np.concatenate(cs), np.concatenate(ks), self.meter)._compact()

    def reflect(self, about: float = 0.0) -> "JointState":
        """Pointer reflection ``q -> 2*about - q``."""
        cs, ks = self.meter.basis_reflect(self.centers, self.kicks, about)
        return JointState(self.dims, self.vectors, cs, ks, self.meter)

    def reduced_system(self) -> DensityState:
        G = self._gram()
        rho = self.vectors.T @ G.T @ self.vectors.conj()
        rho = 0.5 * (rho + rho.conj().T)
        return DensityState(self.dims, rho, unnormalized=abs(np.trace(rho).real - 1) > TOL)

    def meter_given(self, post: PureState) -> tuple[float, Meter]:
        """Probability of system post-selection ``post`` and the conditional meter state."""
        if post.dims != self.dims:
            raise ValueError("post-selection state does not match system dims")
        amps = self.vectors @ post.amps.conj()
        cond = JointState((1,), amps[:, None], self.centers, self.kicks, self.meter)
        p = cond.norm ** 2
        if p <= TOL ** 2:
            raise ZeroDivisionError("post-selection probability is zero")
        amps = amps / np.sqrt(p)
        keep = np.abs(amps) > _DROP * np.max(np.abs(amps))
        amps, centers, kicks = amps[keep], self.centers[keep], self.kicks[keep]
        if isinstance(self.meter, DiscreteMeter):
            return p, self.meter.with_terms(amps, centers, kicks)
        return p, GaussianMeter(self.meter.width, amps, centers, kicks)

    def conditional_system(self, lo: float = -np.inf, hi: float = np.inf) -> tuple[float, DensityState]:
        """Probability that the pointer reads in ``[lo, hi]`` and the normalized system state given that."""
        R = self.meter.region_gram(self.centers, self.kicks, self.centers, self.kicks, lo, hi)
        rho = self.vectors.T @ R.T @ self.vectors.conj()
        rho = 0.5 * (rho + rho.conj().T)
        p = float(np.trace(rho).real)
        if p <= TOL ** 2:
            raise ZeroDivisionError("pointer region has zero probability")
        return p / self.norm ** 2, DensityState(self.dims, rho / p)

    def as_pure_state(self) -> PureState:
        """Dense system (x) pointer vector; discrete meters only."""
        if not isinstance(self.meter, DiscreteMeter):
            raise TypeError("dense form exists only for discrete meters")
        pos = self.meter.positions
        out = np.zeros((int(np.prod(self.dims)), len(pos)), dtype=complex)
        for v, c in zip(self.vectors, self.centers):
            out[:, _index_of(pos, c)] += v
        return PureState(self.dims + (len(pos),), out.ravel(), unnormalized=True)


def couple(s: PureState | JointState, spec: SpectralDecomposition, m: Meter | None = None,
           g: float = 0.0, targets: Sequence[int] | None = None) -> JointState:
    """Von Neumann coupling: ``sum_k (Pi_k s) (x) translate(m, g*lambda_k)``.

    ``s`` is either a bare system state (then ``m`` is its meter) or a joint
    state from an earlier coupling, which allows sequential composition.
    """
    if isinstance(s, JointState):
        if m is not None:
            raise ValueError("joint state already carries its meter")
        joint = s
    else:
        if m is None:
            raise ValueError("a meter is required when coupling a bare system state")
        joint = JointState.product(s, m)
    return joint.couple(spec, g, targets)


@dataclass(frozen=True)
class PointerStats:
    mean_q: float
    var_q: float
    mean_p: float | None
    probability: float
    position_probs: dict[float, float] | None = None


def pointer_stats(joint: JointState, postselect: PureState | None = None) -> PointerStats:
    """Pointer moments, optionally conditioned on a system post-selection ``postselect``."""
    if postselect is not None:
        if postselect.dims != joint.dims:
            raise ValueError("post-selection state does not match system dims")
        b = joint.vectors @ postselect.amps.conj()
        W = np.outer(b.conj(), b)
    else:
        W = joint.vectors.conj() @ joint.vectors.T
    G = joint._gram()
    total = float(np.real(np.sum(W * G)))
    if total <= TOL ** 2:
        raise ZeroDivisionError("post-selection probability is zero")
    Q, Q2, P = joint.meter.q_elements(joint.centers, joint.kicks, joint.centers, joint.kicks)
    mean_q = float(np.real(np.sum(W * Q)) / total)
    var_q = float(np.real(np.sum(W * Q2)) / total - mean_q ** 2)
    mean_p = None if P is None else float(np.real(np.sum(W * P)) / total)
    probs = None
    if isinstance(joint.meter, DiscreteMeter):
        probs = {}
        for i, c in enumerate(joint.centers):
            row = np.real(np.sum(W[:, i] * G[:, i]))
            probs[float(c)] = probs.get(float(c), 0.0) + float(row) / total
        probs = {c: p for c, p in sorted(probs.items())}
    return PointerStats(mean_q, var_q, mean_p, total / joint.norm ** 2, probs)
