"""Controlled-controlled unitary from ancilla-mediated two-body gates.

Register layout: ``[A, B, N, M]`` with qubits A, B (controls), a qutrit
ancilla N and a target qubit M. Every gate touches at most two registers and
never both A and B. The only gate that depends on ``g`` and ``P^M`` is the
ancilla-to-target interaction ``(|0><0| + |1><1|) (x) 1 + |2><2| (x) exp(i g P^M)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .qstate import SX, Operator, PureState, apply, embed, partial_trace, tensor, ket

DIMS = (2, 2, 3, 2)
NAMES = ("A", "B", "N", "M")
SYSTEM = {"A", "B"}
VARIANTS = ("reversal_only", "paper_literal")
RULES = ("strict", "mediated")


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray

    @property
    def support(self) -> frozenset[str]:
        return frozenset(NAMES[t] for t in self.targets)

    def operator(self) -> Operator:
        local = Operator(tuple(DIMS[t] for t in self.targets), self.matrix)
        return embed(local, self.targets, DIMS)


@dataclass(frozen=True, eq=False)
class CCUPlan:
    g: float
    generator: np.ndarray
    variant: str
    gates: tuple[Gate, ...]


def _controlled(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    return np.block([[np.eye(d), np.zeros((d, d))], [np.zeros((d, d)), u]])


def increment(n: int = 3) -> np.ndarray:
    """Cyclic ``P^N |i> = |i+1 mod n>``."""
    return np.roll(np.eye(n, dtype=complex), 1, axis=0)


def plan_ccu(g: float, variant: str = "reversal_only", generator: np.ndarray = SX) -> CCUPlan:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    generator = np.asarray(generator, dtype=complex)
    inc = increment(3)
    final = np.kron(np.diag([1, 1, 0]), np.eye(2)) + np.kron(np.diag([0, 0, 1]), expm(1j * g * generator))
    gates = [
        Gate("C_A-P_N", (0, 2), _controlled(inc)),
        Gate("C_B-P_N", (1, 2), _controlled(inc)),
        Gate("N-W_M", (2, 3), final),
    ]
    if variant == "paper_literal":
        dag = generator.conj().T
        gates += [Gate("C_A-P_M^dag", (0, 3), _controlled(dag)), Gate("C_B-P_M^dag", (1, 3), _controlled(dag))]
    gates += [
        Gate("C_B-P_N^dag", (1, 2), _controlled(inc.conj().T)),
        Gate("C_A-P_N^dag", (0, 2), _controlled(inc.conj().T)),
    ]
    return CCUPlan(float(g), generator, variant, tuple(gates))


def plan_unitary(plan: CCUPlan, upto: int | None = None) -> Operator:
    U = np.eye(int(np.prod(DIMS)), dtype=complex)
    for gate in plan.gates[:upto]:
        U = gate.operator().matrix @ U
    return Operator(DIMS, U)


def cc_unitary(g: float, generator: np.ndarray = SX) -> Operator:
    """Direct ``|11><11| (x) exp(i g P) + (1 - |11><11|) (x) 1`` on ``[A, B, M]``."""
    w = expm(1j * g * np.asarray(generator, dtype=complex))
    p11 = np.diag([0, 0, 0, 1])
    return Operator((2, 2, 2), np.kron(np.eye(4) - p11, np.eye(2)) + np.kron(p11, w), unitary=True)


@dataclass(frozen=True, eq=False)
class CCUResult:
    plan: CCUPlan
    unitary: Operator
    target: Operator
    deviation: float
    ancilla_return: float

    @property
    def exact(self) -> bool:
        return self.deviation <= 1e-9 and self.ancilla_return >= 1 - 1e-9


def build_ccu(g: float, variant: str = "reversal_only", generator: np.ndarray = SX) -> CCUResult:
    """Compose the plan, check the ancilla returns to ``|0>`` and extract the ``[A, B, M]`` unitary.

    ``ancilla_return`` is the smallest probability, over computational basis
    inputs, of finding N back in ``|0>``; ``deviation`` is the largest entry of
    the difference from the directly built controlled-controlled unitary.
    """
    plan = plan_ccu(g, variant, generator)
    U = plan_unitary(plan).matrix.reshape(DIMS + DIMS)
    # <0|_N U |0>_N on [A, B, M]
    block = U[:, :, 0, :, :, :, 0, :].reshape(8, 8)
    ancilla_return = float(np.min(np.sum(np.abs(block) ** 2, axis=0)))
    target = cc_unitary(g, generator)
    deviation = float(np.max(np.abs(block - target.matrix)))
    return CCUResult(plan, Operator((2, 2, 2), block), target, deviation, ancilla_return)


def run_ccu(psi: PureState, g: float, variant: str = "reversal_only", generator: np.ndarray = SX,
            upto: int | None = None) -> PureState:
    """Push a state on ``[A, B, M]`` through the plan with N starting in ``|0>``; result on ``[A, B, N, M]``."""
    if psi.dims != (2, 2, 2):
        raise ValueError("run_ccu expects a state on [A, B, M]")
    full = tensor(psi, ket(0, (3,)))
    # reorder [A, B, M, N] -> [A, B, N, M]
    amps = np.asarray(full.amps).reshape(2, 2, 2, 3).transpose(0, 1, 3, 2).ravel()
    plan = plan_ccu(g, variant, generator)
    return apply(plan_unitary(plan, upto), PureState(DIMS, amps))


def ancilla_state(out: PureState):
    return partial_trace(out, [2])


def verify_interaction_constraint(plan: CCUPlan, rule: str | None = None) -> bool:
    """Check every gate's support against an interaction rule.

    ``strict``: gates touch one system qubit plus N, or N plus M.
    ``mediated``: additionally allows a system qubit with the target M.
    Neither rule allows a gate on both system qubits. The default is ``strict``
    for the reversal-only variant and ``mediated`` for the literal one.
    """
    rule = rule or ("strict" if plan.variant == "reversal_only" else "mediated")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}")
    for gate in plan.gates:
        sup = gate.support
        if len(sup) > 2 or SYSTEM <= sup:
            return False
        if len(sup) == 2 and "N" not in sup:
            if rule == "strict" or "M" not in sup:
                return False
    return True


def constraint_report(plan: CCUPlan) -> dict[str, bool]:
    return {rule: verify_interaction_constraint(plan, rule) for rule in RULES}
