"""Entangling power, entanglement breaking and signalling of bipartite measurement channels."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .measurement import KrausChannel, lueders, tensor_channel
from .observable import SpectralDecomposition
from .qstate import (
    TOL,
    DensityState,
    Operator,
    PureState,
    embed,
    ket,
    partial_trace,
    random_state,
    schmidt_rank,
    tensor,
    trace_distance,
)


@dataclass(frozen=True, eq=False)
class BipartiteChannel:
    """A Kraus channel on ``A (x) B``; ``cut`` lists the subsystems on Alice's side."""

    dims: tuple[int, ...]
    channel: KrausChannel
    cut: tuple[int, ...] = (0,)

    def __post_init__(self):
        if tuple(self.dims) != self.channel.dims:
            raise ValueError("channel dims do not match the bipartition")
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "cut", tuple(self.cut))

    @property
    def bob(self) -> list[int]:
        return [i for i in range(len(self.dims)) if i not in self.cut]

    @classmethod
    def lueders(cls, spec: SpectralDecomposition, cut=(0,)) -> "BipartiteChannel":
        return cls(spec.dims, lueders(spec), cut)

    @classmethod
    def local(cls, alice: KrausChannel, bob: KrausChannel) -> "BipartiteChannel":
        """Independent local channels, outcomes labelled ``(alice, bob)``."""
        return cls(alice.dims + bob.dims, tensor_channel(alice, bob), tuple(range(len(alice.dims))))

    def coarse_grained(self, relabel) -> "BipartiteChannel":
        """Merge outcomes via ``relabel(old_label) -> new_label``; the Kraus operators are kept."""
        ch = KrausChannel(self.dims, self.channel.kraus, [relabel(lab) for lab in self.channel.labels])
        return BipartiteChannel(self.dims, ch, self.cut)


def _product_check(s: PureState, cut, tol):
    rank, _ = schmidt_rank(s, cut, tol)
    if rank != 1:
        raise ValueError("entangling_test requires a product input state")


def entangling_test(ch: BipartiteChannel, outcome, s: PureState, tol: float = TOL) -> tuple[int, np.ndarray]:
    """Schmidt rank across the cut of the normalized sub-channel output for a product input."""
    _product_check(s, ch.cut, tol)
    ops = ch.channel.operators_for(outcome)
    if len(ops) != 1:
        raise ValueError("entangling_test needs a single-Kraus (pure output) outcome")
    out = ops[0].matrix @ s.amps
    if np.linalg.norm(out) ** 2 <= tol:
        raise ValueError(f"outcome {outcome!r} annihilates the input state")
    return schmidt_rank(PureState(s.dims, out, unnormalized=True), ch.cut, tol)


@dataclass(frozen=True)
class EBScanResult:
    passed: bool
    trials: int
    violations: int
    witness: PureState | None

    def summary(self) -> str:
        if self.passed:
            return f"no violation found ({self.trials} trials)"
        return f"{self.violations} violations in {self.trials} trials"


def _fourier(d: int, j: int) -> np.ndarray:
    return np.exp(2j * np.pi * j * np.arange(d) / d) / np.sqrt(d)


def _deterministic_inputs(dims) -> list[PureState]:
    inputs = [ket(lab, dims) for lab in product(*[range(d) for d in dims])]
    for labs in product(*[range(d) for d in dims]):
        vecs = [_fourier(d, j) for d, j in zip(dims, labs)]
        inputs.append(tensor(*[PureState((d,), v) for d, v in zip(dims, vecs)]))
    return inputs


def entanglement_breaking_scan(ch: BipartiteChannel, outcome, trials: int = 200, seed: int = 0,
                               tol: float = 1e-8) -> EBScanResult:
    """Randomized search for an input whose sub-channel output is entangled.

    Each Kraus operator of the outcome is checked separately (all outputs are
    pure for pure inputs). Basis-product inputs are always included, then
    ``trials`` random inputs alternating between product and Haar-random states.
    A pass means no violation was found, not a proof.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    ops = ch.channel.operators_for(outcome)
    inputs = _deterministic_inputs(ch.dims)
    for t in range(trials):
        if t % 2 == 0:
            inputs.append(tensor(*[random_state((d,), rng) for d in ch.dims]))
        else:
            inputs.append(random_state(ch.dims, rng))
    violations, witness = 0, None
    for s in inputs:
        for K in ops:
            out = K.matrix @ s.amps
            if np.linalg.norm(out) ** 2 <= tol:
                continue
            rank, _ = schmidt_rank(PureState(s.dims, out, unnormalized=True), ch.cut, tol)
            if rank > 1:
                violations += 1
                witness = witness or s
                break
    return EBScanResult(violations == 0, len(inputs), violations, witness)


def bob_marginal(ch: BipartiteChannel, rho: DensityState | PureState) -> DensityState:
    return partial_trace(ch.channel.apply(rho), ch.bob)


def signalling_test(ch: BipartiteChannel, alice_preps, probe: PureState | DensityState) -> float:
    """Largest trace distance between Bob's marginals over pairs of Alice's local preparations.

    A value above tolerance means Alice can signal Bob through the channel, so
    the channel is not causal and hence not localizable.
    """
    rho = probe.density() if isinstance(probe, PureState) else probe
    marginals = []
    for prep in alice_preps:
        if isinstance(prep, KrausChannel):
            ops = [K.matrix for K in prep.kraus]
        elif isinstance(prep, Operator):
            ops = [prep.matrix]
        else:
            ops = [np.asarray(prep, dtype=complex)]
        full = [_on_alice(op, ch) for op in ops]
        mat = sum(F @ rho.matrix @ F.conj().T for F in full)
        marginals.append(bob_marginal(ch, DensityState(ch.dims, mat)))
    if len(marginals) < 2:
        return 0.0
    return max(trace_distance(a, b) for a, b in combinations(marginals, 2))


def _on_alice(op: np.ndarray, ch: BipartiteChannel) -> np.ndarray:
    return embed(Operator(tuple(ch.dims[i] for i in ch.cut), op), ch.cut, ch.dims).matrix
