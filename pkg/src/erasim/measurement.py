"""Born, Lüders, ABL, weak-value and modular-value calculators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .observable import SpectralDecomposition, spectral_decompose
from .qstate import TOL, DensityState, Operator, PureState, inner


class SingularPrePostError(ZeroDivisionError):
    """The pre- and post-selected states are orthogonal (or every outcome is blocked)."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Kraus operators with outcome labels; several operators may share a label (coarse graining)."""

    dims: tuple[int, ...]
    kraus: tuple[Operator, ...]
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        if len(self.kraus) != len(self.labels):
            raise ValueError("one label per Kraus operator required")
        d = int(np.prod(self.dims))
        total = sum(K.matrix.conj().T @ K.matrix for K in self.kraus)
        if np.max(np.abs(total - np.eye(d))) > TOL:
            raise ValueError("Kraus operators are not complete (sum K^dag K != I)")
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "kraus", tuple(self.kraus))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def outcomes(self) -> list:
        seen = []
        for lab in self.labels:
            if lab not in seen:
                seen.append(lab)
        return seen

    def operators_for(self, label) -> list[Operator]:
        ops = [K for K, lab in zip(self.kraus, self.labels) if lab == label]
        if not ops:
            raise KeyError(f"no outcome labelled {label!r}")
        return ops

    def apply(self, rho: DensityState | PureState) -> DensityState:
        """Full (trace-preserving) channel action."""
        rho = rho.density() if isinstance(rho, PureState) else rho
        out = sum(K.matrix @ rho.matrix @ K.matrix.conj().T for K in self.kraus)
        return DensityState(self.dims, out, rho.unnormalized)

    def subchannel(self, label, rho: DensityState | PureState):
        """Unnormalized sub-channel output for outcome ``label`` and its probability.

        A pure input through a single-Kraus outcome stays a (unnormalized) ``PureState``.
        """
        ops = self.operators_for(label)
        if isinstance(rho, PureState) and len(ops) == 1:
            out = ops[0].matrix @ rho.amps
            return PureState(self.dims, out, unnormalized=True), float(np.vdot(out, out).real)
        rho = rho.density() if isinstance(rho, PureState) else rho
        out = sum(K.matrix @ rho.matrix @ K.matrix.conj().T for K in ops)
        return DensityState(self.dims, out, unnormalized=True), float(np.trace(out).real)


def subchannel_apply(ch: KrausChannel, label, rho):
    return ch.subchannel(label, rho)


def lueders(spec: SpectralDecomposition) -> KrausChannel:
    """Lüders channel ``rho -> sum_k Pi_k rho Pi_k`` labelled by eigenvalue."""
    return KrausChannel(spec.dims, spec.projectors, spec.eigenvalues)


def tensor_channel(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    kraus, labels = [], []
    for Ka, la in zip(a.kraus, a.labels):
        for Kb, lb in zip(b.kraus, b.labels):
            kraus.append(Operator(a.dims + b.dims, np.kron(Ka.matrix, Kb.matrix)))
            labels.append((la, lb))
    return KrausChannel(a.dims + b.dims, kraus, labels)


def born(s: PureState | DensityState, spec: SpectralDecomposition) -> np.ndarray:
    """Outcome probabilities ``tr[Pi_k rho]`` in eigenvalue order."""
    if s.dims != spec.dims:
        raise ValueError(f"state dims {s.dims} do not match observable dims {spec.dims}")
    if isinstance(s, PureState):
        probs = [np.vdot(s.amps, P.matrix @ s.amps).real for P in spec.projectors]
    else:
        probs = [np.trace(P.matrix @ s.matrix).real for P in spec.projectors]
    return np.array(probs)


@dataclass(frozen=True, eq=False)
class PrePostSelection:
    pre: PureState
    post: PureState

    def __post_init__(self):
        if self.pre.dims != self.post.dims:
            raise ValueError("pre- and post-selection live on different spaces")
        for s in (self.pre, self.post):
            if abs(s.norm - 1) > TOL:
                raise ValueError("pre- and post-selected states must be normalized")

    @property
    def dims(self):
        return self.pre.dims

    def overlap(self) -> complex:
        return inner(self.post, self.pre)


def _check_overlap(pp: PrePostSelection, tol: float) -> complex:
    ov = pp.overlap()
    if abs(ov) <= tol:
        raise SingularPrePostError("pre- and post-selection are orthogonal; the weak value is undefined")
    return ov


def abl(pp: PrePostSelection, spec: SpectralDecomposition, tol: float = TOL) -> np.ndarray:
    """ABL probabilities ``|<phi|A_k|psi>|^2 / sum_j |<phi|A_j|psi>|^2``."""
    if pp.dims != spec.dims:
        raise ValueError("observable and pre/post-selection dims differ")
    amps = np.array([np.vdot(pp.post.amps, P.matrix @ pp.pre.amps) for P in spec.projectors])
    w = np.abs(amps) ** 2
    total = w.sum()
    if total <= tol ** 2:
        raise SingularPrePostError("no outcome connects the pre- and post-selected states")
    return w / total


def weak_value(pp: PrePostSelection, omega: Operator, tol: float = TOL) -> complex:
    """``<phi|Omega|psi> / <phi|psi>``."""
    if omega.dims != pp.dims:
        raise ValueError("operator and pre/post-selection dims differ")
    ov = _check_overlap(pp, tol)
    return complex(np.vdot(pp.post.amps, omega.matrix @ pp.pre.amps) / ov)


def modular_value(pp: PrePostSelection, obs: Operator, K: float, tol: float = TOL) -> complex:
    """``<phi|exp(i K O)|psi> / <phi|psi>`` with the exponential taken spectrally."""
    if obs.dims != pp.dims:
        raise ValueError("operator and pre/post-selection dims differ")
    ov = _check_overlap(pp, tol)
    spec = spectral_decompose(obs)
    U = sum(np.exp(1j * K * lam) * P.matrix for lam, P in zip(spec.eigenvalues, spec.projectors))
    return complex(np.vdot(pp.post.amps, U @ pp.pre.amps) / ov)


def weak_values(pp: PrePostSelection, ops: Sequence[Operator], tol: float = TOL) -> list[complex]:
    return [weak_value(pp, op, tol) for op in ops]
