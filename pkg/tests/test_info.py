import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keybound import quantum as qc
from keybound.errors import InvalidArgument, UnsupportedSize
from keybound.info import (SearchConfig, apply_channel, binary_entropy, ccq_state, conditional_mutual_information,
                           distribution_from_json, distribution_to_json, intrinsic_information,
                           measured_quantum_intrinsic, mutual_information, shannon_entropy, validate_channel)
from keybound.protocols import depolarized_bell_state, observed_distribution, protocol_povms

from oracles import intrinsic_grid_2x2, joint_table_direct

seeds = st.integers(min_value=0, max_value=2**32 - 1)
FAST = SearchConfig(starts=8, max_iter=300)


def random_table(seed, shape):
    return np.random.default_rng(seed).dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)


def test_shannon_entropy_examples():
    assert shannon_entropy([1, 0]) == 0
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1)
    assert shannon_entropy([0.9, 0.1]) == pytest.approx(0.468996, abs=5e-7)


def test_shannon_entropy_rejects_negative():
    with pytest.raises(InvalidArgument):
        shannon_entropy([1.1, -0.1])
    with pytest.raises(InvalidArgument):
        shannon_entropy([0.5, 0.4])
    # round-off below the tolerance is clamped
    assert shannon_entropy([1 + 1e-13, -1e-13]) == pytest.approx(0)


def test_mutual_information_examples():
    assert mutual_information(np.full((2, 2), 0.25)) == pytest.approx(0, abs=1e-12)
    assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(1)
    for e in (0.01, 0.1, 0.3):
        bsc = np.array([[1 - e, e], [e, 1 - e]]) / 2
        assert mutual_information(bsc) == pytest.approx(1 - binary_entropy(e), abs=1e-12)


def test_conditional_mutual_information_examples():
    pab = random_table(4, (2, 2))
    indep = np.einsum("ab,e->abe", pab, [0.3, 0.7])
    assert conditional_mutual_information(indep) == pytest.approx(mutual_information(pab), abs=1e-12)
    reveal = np.zeros((2, 2, 2))
    reveal[0, 0, 0] = reveal[1, 1, 1] = 0.5
    assert conditional_mutual_information(reveal) == pytest.approx(0, abs=1e-12)
    xor = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            xor[a, b, a ^ b] = 0.25
    assert conditional_mutual_information(xor) == pytest.approx(1)


def test_cmi_drops_null_events():
    p = np.zeros((2, 2, 3))
    p[:, :, 0] = np.diag([0.5, 0.5 - 1e-16])
    p[0, 0, 2] = 1e-16
    assert conditional_mutual_information(p) == pytest.approx(1, abs=1e-12)


def test_intrinsic_information_examples():
    pab = np.diag([0.5, 0.5])
    const = np.zeros((2, 2, 2))
    const[:, :, 0] = pab
    assert intrinsic_information(const, FAST).value == pytest.approx(mutual_information(pab), abs=1e-9)
    reveal = np.zeros((2, 2, 2))
    reveal[0, 0, 0] = reveal[1, 1, 1] = 0.5
    assert intrinsic_information(reveal, FAST).value == pytest.approx(0, abs=1e-12)


def test_intrinsic_information_matches_frozen_grid_oracle():
    p = random_table(11, (2, 2, 2))
    # 1/200 grid minimum over binary channels, frozen
    frozen = 0.01993417443265659
    assert intrinsic_grid_2x2(p) == pytest.approx(frozen, abs=1e-12)
    result = intrinsic_information(p)
    assert abs(result.value - frozen) <= 1e-3
    assert result.value <= frozen + 1e-12
    assert conditional_mutual_information(apply_channel(p, result.channel)) == pytest.approx(result.value, abs=1e-12)


def test_intrinsic_information_too_large():
    with pytest.raises(UnsupportedSize):
        intrinsic_information(random_table(0, (2, 2, 7)))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_intrinsic_information_chain(seed):
    p = random_table(seed, (2, 2, 2))
    value = intrinsic_information(p, FAST).value
    assert value >= -1e-12
    assert value <= conditional_mutual_information(p) + 1e-12
    assert value <= mutual_information(p.sum(2)) + 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, st.permutations([0, 1, 2]))
def test_intrinsic_information_relabeling(seed, perm):
    p = random_table(seed, (2, 2, 3))
    a = intrinsic_information(p, FAST).value
    b = intrinsic_information(p[:, :, list(perm)], FAST).value
    assert a == pytest.approx(b, abs=2e-3)


@settings(max_examples=25, deadline=None)
@given(seeds, seeds)
def test_intrinsic_information_below_any_channel(seed, seed_ch):
    p = random_table(seed, (2, 2, 3))
    channel = np.random.default_rng(seed_ch).dirichlet(np.ones(3), size=3)
    value = intrinsic_information(p, FAST).value
    assert value <= conditional_mutual_information(apply_channel(p, channel)) + 1e-9


def test_validate_channel():
    assert np.allclose(validate_channel(np.eye(2)), np.eye(2))
    with pytest.raises(InvalidArgument):
        validate_channel([[0.5, 0.6], [1, 0]])


def test_ccq_product_state():
    rng = np.random.default_rng(1)
    rho_ab = qc.random_density_matrix(4, rng)
    rho_e = qc.random_density_matrix(2, rng)
    spec = protocol_povms("six-state")
    ccq = ccq_state(np.kron(rho_ab, rho_e), spec.alice_povm, spec.bob_povm, (2, 2, 2))
    p = observed_distribution(rho_ab, spec)
    for i in range(6):
        for j in range(6):
            assert np.allclose(ccq.eve_blocks[i, j], p[i, j] * rho_e, atol=1e-12)


def test_ccq_from_purification_reproduces_statistics():
    spec = protocol_povms("six-state")
    rho = depolarized_bell_state(0.1)
    psi = qc.purify(rho)
    ccq = ccq_state(qc.projector(psi), spec.alice_povm, spec.bob_povm, (2, 2, 4))
    assert np.allclose(ccq.probabilities(), observed_distribution(rho, spec), atol=1e-9)
    assert ccq.probabilities().sum() == pytest.approx(1, abs=1e-9)


def test_ccq_pure_entangled_part():
    spec = protocol_povms("four-state")
    phi = np.array([0.6, 0.8j])
    state = np.kron(qc.PSI_PLUS, phi)
    ccq = ccq_state(qc.projector(state), spec.alice_povm, spec.bob_povm, (2, 2, 2))
    target = qc.projector(phi)
    for blk in ccq.eve_blocks.reshape(-1, 2, 2):
        assert np.linalg.matrix_rank(blk, tol=1e-12) <= 1
        if np.trace(blk).real > 1e-12:
            assert np.allclose(blk / np.trace(blk).real, target, atol=1e-12)


def test_ccq_dimension_mismatch():
    spec = protocol_povms("four-state")
    with pytest.raises(InvalidArgument):
        ccq_state(np.eye(8) / 8, spec.alice_povm, spec.bob_povm, (2, 2, 3))


def test_measured_quantum_intrinsic_examples():
    spec = protocol_povms("six-state")
    rho = depolarized_bell_state(0.05)
    p = observed_distribution(rho, spec)
    rng = np.random.default_rng(2)
    rho_e = qc.random_density_matrix(2, rng)
    ccq = ccq_state(np.kron(rho, rho_e), spec.alice_povm, spec.bob_povm, (2, 2, 2))
    assert measured_quantum_intrinsic(ccq, np.eye(2)[None]) == pytest.approx(mutual_information(p), abs=1e-9)
    povm = np.array([qc.projector([1, 0]), qc.projector([0, 1])])
    assert measured_quantum_intrinsic(ccq, povm) == pytest.approx(mutual_information(p), abs=1e-9)
    with pytest.raises(InvalidArgument):
        measured_quantum_intrinsic(ccq, povm[:1])


def test_measured_quantum_intrinsic_against_direct_tabulation():
    spec = protocol_povms("six-state")
    rho = depolarized_bell_state(0.05)
    psi = qc.purify(rho)
    rho_abe = qc.projector(psi)
    rho_e = qc.partial_trace(rho_abe, [4, 4], 1)
    # the purification leaves Eve's marginal diagonal in her standard basis,
    # which fixes an eigenbasis despite the degenerate spectrum
    assert np.allclose(rho_e, np.diag(np.diag(rho_e)), atol=1e-12)
    eve = np.array([qc.projector(qc.ket(k, 4)) for k in range(4)])
    ccq = ccq_state(rho_abe, spec.alice_povm, spec.bob_povm, (2, 2, 4))
    value = measured_quantum_intrinsic(ccq, eve)
    table = joint_table_direct(rho_abe, spec.alice_povm.elements, spec.bob_povm.elements, eve, (2, 2, 4))
    assert value == pytest.approx(conditional_mutual_information(table), abs=1e-9)
    assert value >= 0
    # a fixed measurement of Eve can raise the correlations: conditioning on
    # her eigenbasis outcome gives more than I(A;B) of the 6x6 table here
    assert value == pytest.approx(0.3124241016619031, abs=1e-9)
    assert mutual_information(table.sum(2)) == pytest.approx(0.23786768096134914, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_measured_quantum_intrinsic_equals_cmi_for_projective(seed):
    rng = np.random.default_rng(seed)
    spec = protocol_povms("four-state")
    rho_abe = qc.random_density_matrix(8, rng)
    u = qc.random_unitary(2, rng)
    eve = np.array([qc.projector(u[:, k]) for k in range(2)])
    ccq = ccq_state(rho_abe, spec.alice_povm, spec.bob_povm, (2, 2, 2))
    table = joint_table_direct(rho_abe, spec.alice_povm.elements, spec.bob_povm.elements, eve, (2, 2, 2))
    assert measured_quantum_intrinsic(ccq, eve) == pytest.approx(conditional_mutual_information(table), abs=1e-9)


def test_distribution_json_round_trip():
    p = random_table(3, (2, 3, 2))
    assert np.allclose(distribution_from_json(distribution_to_json(p)), p)
    with pytest.raises(InvalidArgument):
        distribution_from_json({"shape": [2, 2], "probs": [1.0]})
