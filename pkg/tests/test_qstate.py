import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import HARDY_PHI, HARDY_PSI
from erasim.qstate import (
    I2,
    P1,
    SX,
    SZ,
    DensityState,
    Operator,
    PureState,
    apply,
    embed,
    equal_up_to_phase,
    fidelity,
    identity,
    inner,
    ket,
    partial_trace,
    random_density,
    random_state,
    random_unitary,
    schmidt_rank,
    state,
    tensor,
    trace_distance,
)


def test_tensor_basis_states():
    s = tensor(ket(0), ket(1))
    assert s.dims == (2, 2)
    assert np.allclose(s.amps, ket((0, 1)).amps)


def test_tensor_identities():
    out = tensor(identity((2,)), identity((2,)))
    assert out.dims == (2, 2)
    assert np.allclose(out.matrix, np.eye(4))


def test_tensor_plus_plus():
    plus = state([1, 1], normalize=True)
    assert np.allclose(tensor(plus, plus).amps, np.full(4, 0.5))


def test_tensor_rejects_mixed_kinds():
    with pytest.raises(TypeError):
        tensor(ket(0), identity((2,)))


def test_state_validation():
    with pytest.raises(ValueError):
        PureState((2,), [1, 1])
    with pytest.raises(ValueError):
        PureState((2, 2), [1, 0])
    assert PureState((2,), [1, 1], unnormalized=True).norm == pytest.approx(np.sqrt(2))


def test_density_validation():
    with pytest.raises(ValueError):
        DensityState((2,), np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityState((2,), np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityState((2,), np.eye(2))


def test_operator_unitary_flag_checked():
    with pytest.raises(ValueError):
        Operator((2,), np.diag([1, 2]), unitary=True)


def test_embed_first_subsystem():
    assert np.allclose(embed(Operator((2,), SZ), [0], (2, 2)).matrix, np.kron(SZ, I2))


def test_embed_local_projector():
    assert np.allclose(embed(Operator((2,), P1), [1], (2, 2)).matrix, np.kron(I2, P1))


def test_embed_middle_subsystem_matches_explicit(rng):
    X = random_unitary(3, rng)
    op = embed(Operator((3,), X), [1], (2, 3, 2))
    for _ in range(3):
        psi = random_state((3,), rng).amps
        full = np.kron(np.kron([1, 0], psi), [1, 0])
        expected = np.kron(np.kron([1, 0], X @ psi), [1, 0])
        assert np.allclose(op.matrix @ full, expected)


def test_embed_non_adjacent_reversed_targets(rng):
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(3, 3))
    op = embed(Operator((3, 2), np.kron(B, A)), [2, 0], (2, 4, 3))
    assert np.allclose(op.matrix, np.kron(np.kron(A, np.eye(4)), B))


def test_embed_errors():
    with pytest.raises(ValueError):
        embed(Operator((2,), SZ), [0], (3, 2))
    with pytest.raises(ValueError):
        embed(Operator((2, 2), np.eye(4)), [1, 1], (2, 2))
    with pytest.raises(ValueError):
        embed(Operator((2,), SZ), [2], (2, 2))


def test_apply_identity_and_cnot(rng):
    s = random_state((2, 2), rng)
    assert np.allclose(apply(identity((2, 2)), s).amps, s.amps)
    cnot = Operator((2, 2), np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), unitary=True)
    assert np.allclose(apply(cnot, ket((1, 0))).amps, ket((1, 1)).amps)


@pytest.mark.parametrize("n", [2, 3])
def test_apply_increment_coupling(n):
    shift = [np.roll(np.eye(n), k, axis=0) for k in range(n)]
    proj = [np.diag(np.eye(n)[k]) for k in range(n)]
    Us = Operator((n, n), sum(np.kron(p, s) for p, s in zip(proj, shift)), unitary=True)
    for i in range(n):
        for m in range(n):
            assert np.allclose(apply(Us, ket((i, m), (n, n))).amps, ket((i, (m + i) % n), (n, n)).amps)


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(identity((3,)), ket(0))


def test_partial_trace_examples():
    assert np.allclose(partial_trace(ket((0, 1)), [1]).matrix, P1)
    bell = state([1, 0, 0, 1], normalize=True)
    assert np.allclose(partial_trace(bell, [1]).matrix, I2 / 2)
    one = tensor(ket(1), state([1, 1], normalize=True))
    rho = one.density().matrix
    pz = [np.eye(4) - np.diag([0, 0, 0, 1]), np.diag([0, 0, 0, 1])]
    measured = DensityState((2, 2), sum(p @ rho @ p for p in pz))
    assert np.allclose(measured.matrix, np.diag([0, 0, 0.5, 0.5]))
    assert np.allclose(partial_trace(measured, [1]).matrix, I2 / 2)


def test_partial_trace_errors():
    with pytest.raises(ValueError):
        partial_trace(ket((0, 1)), [])
    with pytest.raises(ValueError):
        partial_trace(ket((0, 1)), [2])


def test_inner_examples():
    assert inner(ket(0), ket(0)) == 1
    assert inner(ket(0), ket(1)) == 0
    with pytest.raises(ValueError):
        inner(ket(0), ket((0, 0)))


def test_inner_hardy_pair():
    # <++| applied to (|00> - |01> - |10> - |11>)/2 is (1 - 1 - 1 - 1)/4
    assert inner(PureState((2, 2), HARDY_PHI), PureState((2, 2), HARDY_PSI)) == pytest.approx(-0.5)


def test_schmidt_rank_examples():
    assert schmidt_rank(ket((0, 0)), [0])[0] == 1
    assert schmidt_rank(state([1, 0, 0, 1], normalize=True), [0])[0] == 2
    # outcome 0 of |11><11| on |++>
    out = PureState((2, 2), np.array([1, 1, 1, 0]) / 2, unnormalized=True)
    rank, sv = schmidt_rank(out, [0])
    assert rank == 2
    assert np.allclose(sv, np.linalg.svd(out.amps.reshape(2, 2) / out.norm, compute_uv=False))


def test_schmidt_rank_bad_cut():
    with pytest.raises(ValueError):
        schmidt_rank(ket((0, 0)), [0, 1])


def test_trace_distance_examples():
    rho = ket(0).density()
    assert trace_distance(rho, rho) == 0
    assert trace_distance(ket(0).density(), ket(1).density()) == pytest.approx(1)
    plus = state([1, 1], normalize=True).density()
    mixed = DensityState((2,), I2 / 2)
    # eigenvalues of |+><+| - I/2 are +-1/2
    assert trace_distance(plus, mixed) == pytest.approx(0.5)


def test_equal_up_to_phase(rng):
    s = random_state((3,), rng)
    assert equal_up_to_phase(s, PureState((3,), np.exp(0.7j) * s.amps))
    assert not equal_up_to_phase(ket(0), ket(1))


# -- properties -----------------------------------------------------------------

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
small_dims = st.lists(st.integers(min_value=1, max_value=3), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dims=small_dims)
def test_unitary_preserves_norm(seed, dims):
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    U = Operator(tuple(dims), random_unitary(d, rng), unitary=True)
    assert abs(apply(U, random_state(dims, rng)).norm - 1) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, da=st.integers(2, 3), db=st.integers(2, 3))
def test_partial_trace_of_product(seed, da, db):
    rng = np.random.default_rng(seed)
    ra, rb = random_density((da,), rng), random_density((db,), rng)
    prod = tensor(ra, rb)
    assert np.max(np.abs(partial_trace(prod, [0]).matrix - ra.matrix)) < 1e-9
    assert np.max(np.abs(partial_trace(prod, [1]).matrix - rb.matrix)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_inner_conjugate_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = random_state((2, 3), rng), random_state((2, 3), rng)
    assert abs(inner(a, b) - np.conj(inner(b, a))) < 1e-12


def test_schmidt_rank_local_unitary_invariance(rng):
    for trial in range(50):
        k = trial % 3 + 1
        # rank-k state on 3x3
        a = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0][:, :k]
        b = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0][:, :k]
        coeffs = rng.random(k) + 0.1
        vec = sum(c * np.kron(a[:, i], b[:, i]) for i, c in enumerate(coeffs))
        s = PureState((3, 3), vec / np.linalg.norm(vec))
        U = np.kron(random_unitary(3, rng), random_unitary(3, rng))
        assert schmidt_rank(s, [0])[0] == k
        assert schmidt_rank(apply(Operator((3, 3), U, unitary=True), s), [0])[0] == k


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_trace_distance_triangle(seed):
    rng = np.random.default_rng(seed)
    r, s, t = (random_density((3,), rng) for _ in range(3))
    assert trace_distance(r, t) <= trace_distance(r, s) + trace_distance(s, t) + 1e-9
    assert abs(trace_distance(r, s) - trace_distance(s, r)) < 1e-12


def test_fidelity_phase_insensitive(rng):
    s = random_state((2,), rng)
    assert fidelity(s, PureState((2,), -1j * s.amps)) == pytest.approx(1)
    assert fidelity(ket(0), state([1, 1], normalize=True)) == pytest.approx(0.5)


def test_operator_algebra():
    a = Operator((2,), SX)
    b = Operator((2,), SZ)
    assert np.allclose((a @ b).matrix, SX @ SZ)
    assert np.allclose((a + b).matrix, SX + SZ)
    assert np.allclose((2 * a - b).matrix, 2 * SX - SZ)
    assert a.is_hermitian()
    assert not Operator((2,), np.array([[0, 1], [0, 0]])).is_hermitian()
