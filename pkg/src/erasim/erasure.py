"""Measure-then-erase constructions of the von Neumann coupling.

Subsystem layout used throughout the two-party protocol: ``[A, B, A_N, B_N]``
where ``A_N`` and ``B_N`` are Alice's and Bob's halves of the ancilla meter N.
The pointer meter M lives in the ``JointState`` terms and sits with Bob.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measurement import PrePostSelection, weak_value
from .meter import DiscreteMeter, JointState, Meter, classify_strength, couple, pointer_stats
from .observable import (
    ProductObservable,
    SpectralDecomposition,
    omega_mu,
    projector_decomposition,
    spectral_decompose,
)
from .qstate import (
    P1,
    SZ,
    DensityState,
    Operator,
    PureState,
    apply,
    embed,
    ket,
    partial_trace,
    project,
    tensor,
)


def shift_matrix(n: int, k: int = 1) -> np.ndarray:
    """Cyclic increment ``|m> -> |m+k mod n>``."""
    return np.roll(np.eye(n, dtype=complex), k % n, axis=0)


@dataclass(frozen=True, eq=False)
class AncillaConfig:
    """Ancilla N for an Alice-side spectrum ``x_0 < ... < x_{n-1}``."""

    dim: int
    qb_eigenvalues: tuple[float, ...]

    @classmethod
    def for_spectrum(cls, eigenvalues) -> "AncillaConfig":
        n = len(eigenvalues)
        # Q^{B_N} |m> = x_{-m} |m>
        return cls(n, tuple(float(eigenvalues[(-m) % n]) for m in range(n)))

    @property
    def entangled_init(self) -> PureState:
        n = self.dim
        amps = np.eye(n, dtype=complex).ravel() / np.sqrt(n)
        return PureState((n, n), amps)

    @property
    def erase_target(self) -> PureState:
        return self.fourier(0)

    def fourier(self, j: int) -> PureState:
        """Erasure-basis outcome ``j``; ``j = 0`` is the uniform superposition ``|+M>``."""
        n = self.dim
        m = np.arange(n)
        return PureState((n,), np.exp(2j * np.pi * j * m / n) / np.sqrt(n))

    def q_operator(self) -> Operator:
        return Operator((self.dim,), np.diag(self.qb_eigenvalues))


@dataclass(frozen=True, eq=False)
class ProtocolOutcome:
    """One branch of a probabilistic erasure protocol.

    ``joint_state`` is the normalized system (x) meter state left in the branch.
    Without corrections it equals ``known_unitary @ exp(-i g Omega_mu P)`` applied
    to the input, up to a global phase; ``known_unitary`` is ``None`` when the
    branch needs no extra unitary.
    """

    mu: int
    erased: bool
    erasure_outcome: int
    probability: float
    joint_state: JointState
    effective_operator: Operator
    known_unitary: Operator | None = None
    correction_applied: str | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def label(self) -> str:
        return f"mu={self.mu},erasure={'ok' if self.erased else f'fail{self.erasure_outcome}'}"


def expected_branch(outcome: ProtocolOutcome, s: PureState, m: Meter, g: float) -> JointState:
    """Direct coupling of the branch's effective operator, followed by its known unitary."""
    target = couple(s, spectral_decompose(outcome.effective_operator), m, g)
    if outcome.known_unitary is not None:
        target = target.apply(outcome.known_unitary)
    return target


def branch_fidelity(outcome: ProtocolOutcome, s: PureState, m: Meter, g: float) -> float:
    return outcome.joint_state.fidelity(expected_branch(outcome, s, m, g))


# -- single-site scheme --------------------------------------------------------

def prop1_branches(s: PureState, spec: SpectralDecomposition, m: Meter, g: float,
                   targets=None) -> list[tuple[int, float, JointState]]:
    """Strong measurement of ``spec`` into a discrete ancilla, ancilla-to-meter coupling, erasure.

    Returns ``(erasure outcome j, probability, unnormalized joint state)``
    for every outcome of the erasure-basis measurement; ``j = 0`` is success.
    """
    if targets is not None:
        spec = spec.embedded(targets, s.dims)
    if spec.dims != s.dims:
        raise ValueError("observable and state dims differ")
    n = len(spec)
    nidx = len(s.dims)
    dims = s.dims + (n,)
    # U |k-eigenspace>|0>_N = |k-eigenspace>|k>_N
    U = sum(np.kron(P.matrix, shift_matrix(n, k)) for k, P in enumerate(spec.projectors))
    state1 = apply(Operator(dims, U, unitary=True), tensor(s, ket(0, (n,))))
    spec_n = projector_decomposition(
        [Operator((n,), np.diag(np.eye(n)[k])) for k in range(n)], spec.eigenvalues)
    joint = JointState.product(state1, m).couple(spec_n, g, targets=[nidx])
    anc = AncillaConfig(n, tuple(spec.eigenvalues))
    out = []
    for j in range(n):
        branch = joint.project(nidx, anc.fourier(j))
        out.append((j, branch.norm ** 2, branch))
    return out


def prop1_measure(s: PureState, spec: SpectralDecomposition, m: Meter, g: float,
                  targets=None) -> tuple[JointState, float]:
    """Success branch (normalized) and its probability for the measure-then-erase scheme."""
    _, prob, branch = prop1_branches(s, spec, m, g, targets)[0]
    return branch.normalized(), prob


# -- two-party product protocol -------------------------------------------------

def _strong_coupling(p: ProductObservable) -> Operator:
    """``U_s = sum_k Xhat_k (x) S^k`` on Alice's system and ``A_N``, embedded in ``[A, B, A_N, B_N]``."""
    n = p.n_labels
    sp = p.alice_spec
    U = sum(np.kron(P.matrix, shift_matrix(n, k)) for k, P in enumerate(sp.projectors))
    local = Operator(sp.dims + (n,), U, unitary=True)
    return embed(local, [p.alice, 2], p.dims + (n, n))


def _failure_unitary(p: ProductObservable, j: int) -> Operator:
    """Alice-side unitary ``sum_k w^{jk} Xhat_k`` left behind by erasure outcome ``j``."""
    n = p.n_labels
    sp = p.alice_spec
    w = np.exp(2j * np.pi / n)
    U = sum(w ** (j * k) * P.matrix for k, P in enumerate(sp.projectors))
    return embed(Operator(sp.dims, U, unitary=True), [p.alice], p.dims)


def nonlocal_product_measure(p: ProductObservable, s: PureState, m: Meter, g: float) -> list[ProtocolOutcome]:
    """Run the four-step protocol and enumerate every (mu, erasure outcome) branch.

    1. Alice applies ``U_s`` between her system and ``A_N``.
    2. Alice reads ``A_N`` (outcome ``mu``).
    3. Bob couples ``Y (x) Q^{B_N}`` to the meter with strength ``g``.
    4. Bob measures ``B_N`` in the Fourier basis; outcome 0 is a successful erasure.
    """
    if s.dims != p.dims:
        raise ValueError(f"state dims {s.dims} do not match observable dims {p.dims}")
    n = p.n_labels
    anc = AncillaConfig.for_spectrum(p.alice_spec.eigenvalues)
    psi1 = apply(_strong_coupling(p), tensor(s, anc.entangled_init))
    yq = spectral_decompose(tensor(p.bob_spec.source, anc.q_operator()))
    outcomes = []
    for mu in range(n):
        psi2 = project(psi1, 2, ket(mu, (n,)))
        joint3 = JointState.product(psi2, m).couple(yq, g, targets=[p.bob, 2])
        eff = omega_mu(p, mu)
        for j in range(n):
            branch = joint3.project(2, anc.fourier(j))
            prob = branch.norm ** 2
            outcomes.append(ProtocolOutcome(
                mu=mu,
                erased=(j == 0),
                erasure_outcome=j,
                probability=prob,
                joint_state=branch.normalized(),
                effective_operator=eff,
                known_unitary=None if j == 0 else _failure_unitary(p, j),
            ))
    return outcomes


def alice_steps_bob_marginal(p: ProductObservable, s: PureState, readout: bool) -> DensityState:
    """Bob's reduced state on ``[B, B_N]`` after Alice's coupling, with or without her readout."""
    n = p.n_labels
    anc = AncillaConfig.for_spectrum(p.alice_spec.eigenvalues)
    psi1 = apply(_strong_coupling(p), tensor(s, anc.entangled_init))
    rho = psi1.density()
    if readout:
        dims = psi1.dims
        mat = np.zeros_like(rho.matrix)
        for mu in range(n):
            P = embed(Operator((n,), np.diag(np.eye(n)[mu])), [2], dims).matrix
            mat = mat + P @ rho.matrix @ P
        rho = DensityState(dims, mat)
    return partial_trace(rho, [p.bob, 3])


# -- gate-level |11><11| circuit ---------------------------------------------

def pi11_circuit(s: PureState, m: Meter, g: float) -> list[ProtocolOutcome]:
    """Gate-level circuit for ``|11><11|``: CNOT(A -> A_N), CC-W(B, B_N -> meter), ancilla readout.

    ``W`` translates the pointer by ``+g``. The (A_N=0, B_N=+) branch realizes
    ``exp(-i g Pi_11 P)`` with probability 1/4 for any input.
    """
    if s.dims != (2, 2):
        raise ValueError("pi11_circuit acts on two qubits")
    bell = PureState((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
    psi = tensor(s, bell)
    cnot = Operator((2, 2), np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), unitary=True)
    psi = apply(cnot, psi, targets=[0, 2])
    p = ProductObservable.from_operators(P1, P1)
    # controlled-controlled translation by g: couple to |1><1|_B (x) |1><1|_{B_N}
    cc = projector_decomposition(
        [Operator((2, 2), np.eye(4) - np.diag([0, 0, 0, 1])), Operator((2, 2), np.diag([0, 0, 0, 1]))], [0.0, 1.0])
    plus = PureState((2,), np.array([1, 1]) / np.sqrt(2))
    minus = PureState((2,), np.array([1, -1]) / np.sqrt(2))
    z_alice = embed(Operator((2,), SZ, unitary=True), [0], (2, 2))
    outcomes = []
    for mu in (0, 1):
        after_alice = project(psi, 2, ket(mu, (2,)))
        joint = JointState.product(after_alice, m).couple(cc, g, targets=[1, 2])
        for j, bra in enumerate((plus, minus)):
            branch = joint.project(2, bra)
            outcomes.append(ProtocolOutcome(
                mu=mu,
                erased=(j == 0),
                erasure_outcome=j,
                probability=branch.norm ** 2,
                joint_state=branch.normalized(),
                effective_operator=omega_mu(p, mu),
                known_unitary=None if j == 0 else z_alice,
            ))
    return outcomes


# -- product of Pauli operators -------------------------------------------------

def _meter_reference(m: Meter) -> float:
    """Pointer origin used by the corrections: the initial mean position."""
    if isinstance(m, DiscreteMeter):
        return float(np.real(np.sum(np.abs(m.amps) ** 2 * np.array(m.positions))))
    return pointer_stats(JointState.product(PureState((1,), [1.0]), m)).mean_q


def pauli_product_measure(s: PureState, m: Meter, g: float, correct: bool = False) -> list[ProtocolOutcome]:
    """The protocol for ``sigma_z (x) sigma_z``, optionally with the strong-limit corrections.

    Corrections, applied per branch:

    * failed erasure: Bob applies ``exp(i (pi/2) sigma_z^B (Q - q0) / g)``, which
      removes the ``sigma_z^A`` left on Alice's side (exact when the pointer
      branches are orthogonal);
    * ``mu = 1``: the pointer is reflected about its origin ``q0``, undoing the
      sign of the shift. This uses Alice's classical outcome and can be applied
      at readout time.

    With corrections every branch targets ``exp(-i g sigma_z sigma_z P)``.
    """
    if g == 0 and correct:
        raise ValueError("corrections are undefined at g = 0")
    p = ProductObservable.from_operators(SZ, SZ)
    raw = nonlocal_product_measure(p, s, m, g)
    if not correct:
        return raw
    q0 = _meter_reference(m)
    warnings: tuple[str, ...] = ()
    if not isinstance(m, DiscreteMeter):
        regime = classify_strength([-g, g], m.width)
        if regime != "strong":
            warnings = (f"meter is {regime} (g/width={g / m.width:.3g}); correction is exact only in the strong limit",)
    zb = spectral_decompose(Operator((2,), SZ))
    theta = np.pi / (2 * g)
    comp = embed(Operator((2,), np.diag(np.exp(-1j * theta * q0 * np.array([1, -1])))), [1], (2, 2))
    target_op = omega_mu(p, 0)
    out = []
    for o in raw:
        joint = o.joint_state
        steps = []
        if not o.erased:
            joint = joint.position_phase(zb, theta, targets=[1]).apply(comp)
            steps.append("exp(i(pi/2) sz_B (Q-q0)/g)")
        if o.mu == 1:
            joint = joint.reflect(q0)
            steps.append("pointer reflection about q0")
        out.append(ProtocolOutcome(
            mu=o.mu, erased=o.erased, erasure_outcome=o.erasure_outcome,
            probability=o.probability, joint_state=joint.normalized(),
            effective_operator=target_op, known_unitary=None,
            correction_applied=" then ".join(steps) or None,
            warnings=warnings,
        ))
    return out


# -- post-selected bookkeeping ----------------------------------------------------

def postselected_equivalence(pp: PrePostSelection, p: ProductObservable, tol: float = 1e-9) -> tuple[complex, complex]:
    """Weak value of ``Y Q^{B_N}`` in the extended, ``U_s``-evolved experiment vs ``{X Y}_w``.

    The extended pre-selection is ``U_s |psi>|+_x>``; the post-selection is
    ``|phi>|0>_{A_N}|+M>_{B_N}``.
    """
    if pp.dims != p.dims:
        raise ValueError("pre/post-selection dims do not match the observable")
    n = p.n_labels
    anc = AncillaConfig.for_spectrum(p.alice_spec.eigenvalues)
    pre = apply(_strong_coupling(p), tensor(pp.pre, anc.entangled_init))
    post = tensor(pp.post, ket(0, (n,)), anc.erase_target)
    dims = pre.dims
    yq = embed(tensor(p.bob_spec.source, anc.q_operator()), [p.bob, 3], dims)
    lhs = weak_value(PrePostSelection(pre, post), yq, tol=tol / n)
    rhs = weak_value(pp, p.operator(), tol=tol)
    return lhs, rhs
