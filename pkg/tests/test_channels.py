import numpy as np
import pytest

from erasim.channels import (
    BipartiteChannel,
    bob_marginal,
    entanglement_breaking_scan,
    entangling_test,
    signalling_test,
)
from erasim.measurement import KrausChannel, lueders
from erasim.observable import spectral_decompose
from erasim.qstate import I2, P0, P1, SX, SZ, Operator, PureState, ket, random_state, random_unitary, state, tensor

PLUS = state([1, 1], normalize=True)
PLUS2 = tensor(PLUS, PLUS)


def _bip(matrix, dims=(2, 2)):
    return BipartiteChannel.lueders(spectral_decompose(Operator(dims, matrix)))


def _resets():
    to0 = KrausChannel((2,), [Operator((2,), np.array([[1, 0], [0, 0]])), Operator((2,), np.array([[0, 1], [0, 0]]))], ["a", "b"])
    to1 = KrausChannel((2,), [Operator((2,), np.array([[0, 0], [1, 0]])), Operator((2,), np.array([[0, 0], [0, 1]]))], ["a", "b"])
    return [to0, to1]


def _local_z():
    z = lueders(spectral_decompose(Operator((2,), SZ)))
    return BipartiteChannel.local(z, z)


def test_pi11_outcome_zero_entangles():
    rank, sv = entangling_test(_bip(np.kron(P1, P1)), 0.0, PLUS2)
    assert rank == 2
    # (|00> + |01> + |10>)/sqrt(3) has Schmidt coefficients (3 +- sqrt 5)/6 squared
    assert np.allclose(np.sort(sv ** 2), np.sort([(3 - np.sqrt(5)) / 6, (3 + np.sqrt(5)) / 6]))


def test_zz_outcome_entangles():
    assert entangling_test(_bip(np.kron(SZ, SZ)), 1.0, PLUS2)[0] == 2


def test_local_outcomes_do_not_entangle(rng):
    ch = _local_z()
    for lab in ch.channel.outcomes:
        s = tensor(random_state((2,), rng), random_state((2,), rng))
        assert entangling_test(ch, lab, s)[0] == 1


def test_entangling_test_rejects_entangled_input():
    with pytest.raises(ValueError):
        entangling_test(_bip(np.kron(P1, P1)), 0.0, state([1, 0, 0, 1], normalize=True))


def test_entangling_test_annihilated_input():
    with pytest.raises(ValueError):
        entangling_test(_bip(np.kron(P1, P1)), 1.0, ket((0, 0)))


def test_entangling_rank_local_unitary_invariant(rng):
    ch = _bip(np.kron(P1, P1))
    for _ in range(10):
        s = tensor(random_state((2,), rng), random_state((2,), rng))
        ua, ub = random_unitary(2, rng), random_unitary(2, rng)
        conj = np.kron(ua, ub)
        rotated = BipartiteChannel.lueders(spectral_decompose(Operator((2, 2), conj @ np.kron(P1, P1) @ conj.conj().T)))
        moved = PureState((2, 2), conj @ s.amps)
        zero = rotated.channel.outcomes[0]
        assert abs(zero) < 1e-12
        assert entangling_test(ch, 0.0, s)[0] == entangling_test(rotated, zero, moved)[0]


def test_eb_scan_flags_pi11():
    res = entanglement_breaking_scan(_bip(np.kron(P1, P1)), 0.0, trials=20, seed=1)
    assert not res.passed and res.witness is not None
    assert "violations" in res.summary()


def test_eb_scan_passes_local_and_coarse_grained():
    ch = _local_z()
    assert entanglement_breaking_scan(ch, (1.0, 1.0), trials=50).passed
    parity = ch.coarse_grained(lambda lab: lab[0] * lab[1])
    res = entanglement_breaking_scan(parity, 1.0, trials=50)
    assert res.passed and "no violation" in res.summary()


def test_eb_scan_validates_trials():
    with pytest.raises(ValueError):
        entanglement_breaking_scan(_local_z(), (1.0, 1.0), trials=0)


def test_pi11_signals():
    assert signalling_test(_bip(np.kron(P1, P1)), _resets(), PLUS2) == pytest.approx(0.5)


def test_zz_does_not_signal_with_resets():
    assert signalling_test(_bip(np.kron(SZ, SZ)), _resets(), PLUS2) < 1e-12


def test_local_channels_do_not_signal(rng):
    ch = _local_z()
    for _ in range(10):
        preps = [Operator((2,), random_unitary(2, rng)) for _ in range(2)]
        probe = random_state((2, 2), rng)
        assert signalling_test(ch, preps, probe) < 1e-9


def test_identity_channel_does_not_signal(rng):
    ident = BipartiteChannel((2, 2), KrausChannel((2, 2), [Operator((2, 2), np.eye(4))], ["id"]))
    assert signalling_test(ident, _resets(), random_state((2, 2), rng)) < 1e-12
    assert signalling_test(ident, [np.eye(2)], PLUS2) == 0.0


def test_lueders_channels_trace_preserving(rng):
    for m in (np.kron(P1, P1), np.kron(SZ, SX), np.kron(SZ, SZ)):
        rho = random_state((2, 2), rng).density()
        assert _bip(m).channel.apply(rho).trace == pytest.approx(1)
        assert bob_marginal(_bip(m), rho).trace == pytest.approx(1)


def test_dims_mismatch():
    z = lueders(spectral_decompose(Operator((2,), SZ)))
    with pytest.raises(ValueError):
        BipartiteChannel((2, 2), z)


def test_local_sum_does_not_entangle(rng):
    # X (x) 1 + 1 (x) 10 P0 has no accidental degeneracy, so every outcome is a local projector
    X = np.diag([0.0, 1.0, 2.0])
    ch = BipartiteChannel.lueders(spectral_decompose(Operator((3, 2), np.kron(X, I2) + np.kron(np.eye(3), 10 * P0))))
    assert len(ch.channel.outcomes) == 6
    s = tensor(random_state((3,), rng), random_state((2,), rng))
    for lab in ch.channel.outcomes:
        assert entangling_test(ch, lab, s)[0] == 1


def test_accidental_degeneracy_entangles(rng):
    # x=1 with P0=0 and x=0 with P0=1 share eigenvalue 1
    X = np.diag([0.0, 1.0, 2.0])
    ch = BipartiteChannel.lueders(spectral_decompose(Operator((3, 2), np.kron(X, I2) + np.kron(np.eye(3), P0))))
    s = tensor(random_state((3,), rng), random_state((2,), rng))
    assert entangling_test(ch, 1.0, s)[0] == 2
