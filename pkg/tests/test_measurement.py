import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import HARDY_PHI, HARDY_PSI
from erasim.measurement import (
    KrausChannel,
    PrePostSelection,
    SingularPrePostError,
    abl,
    born,
    lueders,
    modular_value,
    subchannel_apply,
    tensor_channel,
    weak_value,
    weak_values,
)
from erasim.observable import projector_decomposition, spectral_decompose
from erasim.qstate import I2, P0, P1, SZ, DensityState, Operator, PureState, ket, random_density, random_state, state

HARDY = PrePostSelection(PureState((2, 2), HARDY_PSI), PureState((2, 2), HARDY_PHI))


def op2(m):
    return Operator((2, 2), m)


def test_born_examples():
    assert np.allclose(born(ket(0), spectral_decompose(Operator((2,), SZ))), [0, 1])
    plus2 = state([1, 1, 1, 1], normalize=True)
    assert np.allclose(born(plus2, spectral_decompose(op2(np.kron(SZ, SZ)))), [0.5, 0.5])
    # amplitude of |11> in the Hardy state is -1/2
    assert born(HARDY.pre, spectral_decompose(op2(np.kron(P1, P1))))[1] == pytest.approx(0.25)


def test_born_dims_mismatch():
    with pytest.raises(ValueError):
        born(ket(0), spectral_decompose(op2(np.kron(SZ, SZ))))


def test_kraus_completeness_enforced():
    with pytest.raises(ValueError):
        KrausChannel((2,), [Operator((2,), P0)], ["a"])
    with pytest.raises(ValueError):
        KrausChannel((2,), [Operator((2,), P0), Operator((2,), P1)], ["a"])


def test_lueders_identity_observable():
    ch = lueders(spectral_decompose(Operator((2,), 3 * I2)))
    assert len(ch.kraus) == 1
    rho = DensityState((2,), np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert np.allclose(ch.apply(rho).matrix, rho.matrix)


def test_lueders_zz_plus_outcome():
    ch = lueders(spectral_decompose(op2(np.kron(SZ, SZ))))
    out, prob = subchannel_apply(ch, 1.0, state([1, 1, 1, 1], normalize=True))
    assert isinstance(out, PureState) and out.unnormalized
    assert np.allclose(out.amps, [0.5, 0, 0, 0.5])
    assert prob == pytest.approx(0.5)


def test_lueders_pi11_on_one():
    ch = lueders(spectral_decompose(op2(np.kron(P1, P1))))
    one = PureState((2, 2), np.kron([0, 1], [1, 1]) / np.sqrt(2))
    assert np.allclose(ch.apply(one).matrix, np.diag([0, 0, 0.5, 0.5]))


def test_subchannel_mixed_input(rng):
    ch = lueders(spectral_decompose(op2(np.kron(SZ, SZ))))
    rho = random_density((2, 2), rng)
    probs = [ch.subchannel(lab, rho)[1] for lab in ch.outcomes]
    assert sum(probs) == pytest.approx(1)
    out, p = ch.subchannel(1.0, rho)
    assert out.unnormalized and out.trace == pytest.approx(p)


def test_unknown_outcome():
    ch = lueders(spectral_decompose(Operator((2,), SZ)))
    with pytest.raises(KeyError):
        ch.operators_for(7)


def test_abl_hardy():
    local_a = projector_decomposition([op2(np.kron(P0, I2)), op2(np.kron(P1, I2))])
    local_b = projector_decomposition([op2(np.kron(I2, P0)), op2(np.kron(I2, P1))])
    assert abl(HARDY, local_a)[1] == pytest.approx(1, abs=1e-12)
    assert abl(HARDY, local_b)[1] == pytest.approx(1, abs=1e-12)
    assert abl(HARDY, spectral_decompose(op2(np.kron(P1, P1))))[1] == pytest.approx(0.5, abs=1e-12)
    joint = projector_decomposition([op2(np.kron(a, b)) for a in (P0, P1) for b in (P0, P1)])
    assert abl(HARDY, joint)[3] == pytest.approx(0.25, abs=1e-12)


def test_abl_blocked():
    pp = PrePostSelection(ket((0, 0)), ket((1, 1)))
    with pytest.raises(SingularPrePostError):
        abl(pp, spectral_decompose(op2(np.kron(SZ, I2))))


def test_weak_values_hardy():
    ops = [np.kron(P1, I2), np.kron(I2, P1), np.kron(P1, P1), np.kron(P0, P1), np.kron(P1, P0), np.kron(P0, P0)]
    got = weak_values(HARDY, [op2(m) for m in ops])
    assert np.allclose(got, [1, 1, 0.5, 0.5, 0.5, -0.5], atol=1e-12)
    assert weak_value(HARDY, op2(np.eye(4))) == pytest.approx(1)


def test_weak_value_singular():
    pp = PrePostSelection(ket(0), ket(1))
    with pytest.raises(SingularPrePostError):
        weak_value(pp, Operator((2,), SZ))
    with pytest.raises(ZeroDivisionError):
        modular_value(pp, Operator((2,), SZ), 1.0)


def test_prepost_validation():
    with pytest.raises(ValueError):
        PrePostSelection(ket(0), ket((0, 0)))
    with pytest.raises(ValueError):
        PrePostSelection(PureState((2,), [1, 1], unnormalized=True), ket(0))


def test_modular_value_examples():
    assert modular_value(HARDY, op2(np.kron(P1, P1)), 0.0) == pytest.approx(1)
    pp = PrePostSelection(ket(0), ket(0))
    assert modular_value(pp, Operator((2,), SZ), 0.37) == pytest.approx(np.exp(0.37j))
    # e^{i pi Pi} = 1 - 2 Pi, so the modular value is 1 - 2 * (1/2)
    assert abs(modular_value(HARDY, op2(np.kron(P1, P1)), np.pi)) < 1e-12


def test_tensor_channel_labels():
    z = lueders(spectral_decompose(Operator((2,), SZ)))
    both = tensor_channel(z, z)
    assert both.outcomes == [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]


# -- properties ------------------------------------------------------------------

seeds = st.integers(0, 2 ** 32 - 1)


def _random_projectors(rng, d, k):
    U = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    cuts = np.sort(rng.choice(np.arange(1, d), size=k - 1, replace=False)) if k > 1 else []
    blocks = np.split(np.arange(d), cuts)
    return [Operator((d,), U[:, b] @ U[:, b].conj().T) for b in blocks]


@settings(max_examples=30, deadline=None)
@given(seed=seeds, k=st.integers(1, 4))
def test_weak_value_sum_rule(seed, k):
    rng = np.random.default_rng(seed)
    pp = PrePostSelection(random_state((4,), rng), random_state((4,), rng))
    total = sum(weak_value(pp, P) for P in _random_projectors(rng, 4, k))
    assert abs(total - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=seeds, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_weak_value_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    pp = PrePostSelection(random_state((3,), rng), random_state((3,), rng))
    A = Operator((3,), rng.normal(size=(3, 3)))
    B = Operator((3,), rng.normal(size=(3, 3)))
    lhs = weak_value(pp, a * A + b * B)
    rhs = a * weak_value(pp, A) + b * weak_value(pp, B)
    assert abs(lhs - rhs) < 1e-9 * max(1, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, k=st.integers(1, 4))
def test_abl_normalized(seed, k):
    rng = np.random.default_rng(seed)
    pp = PrePostSelection(random_state((4,), rng), random_state((4,), rng))
    probs = abl(pp, projector_decomposition(_random_projectors(rng, 4, k)))
    assert abs(probs.sum() - 1) < 1e-9 and np.all(probs >= 0)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, k=st.integers(1, 4))
def test_lueders_idempotent(seed, k):
    rng = np.random.default_rng(seed)
    ch = lueders(projector_decomposition(_random_projectors(rng, 4, k)))
    rho = random_density((4,), rng)
    once = ch.apply(rho)
    assert np.max(np.abs(ch.apply(once).matrix - once.matrix)) < 1e-9
    assert abs(once.trace - 1) < 1e-9


def test_abl_agrees_with_two_step_simulation(rng):
    """With a non-degenerate intermediate measurement, ABL equals the Bayes ratio of a direct simulation."""
    for _ in range(20):
        psi = random_state((3,), rng)
        phi = random_state((3,), rng)
        projs = _random_projectors(rng, 3, 3)
        joint = np.array([abs(np.vdot(phi.amps, P.matrix @ psi.amps)) ** 2 for P in projs])
        # probability of outcome k then of passing phi, from the Lüders branch states
        ch = lueders(projector_decomposition(projs))
        seq = []
        for lab in ch.outcomes:
            out, p = ch.subchannel(lab, psi)
            seq.append(p * abs(np.vdot(phi.amps, out.amps / np.sqrt(p))) ** 2)
        assert np.allclose(joint, seq)
        assert np.allclose(abl(PrePostSelection(psi, phi), projector_decomposition(projs)), np.array(seq) / sum(seq))
