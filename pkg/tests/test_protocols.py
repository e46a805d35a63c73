import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keybound import quantum as qc
from keybound.bsa import EquivalenceClassSpec, max_separable_weight
from keybound.detectors import VAC, DetectorSpec, noisy_povm
from keybound.errors import InvalidArgument
from keybound.info import binary_entropy, mutual_information
from keybound.protocols import (born_table, depolarized_bell_state, key_basis_distribution, observed_distribution,
                                protocol_povms, tomography_distribution, weighted_povm)

BELL = qc.projector(qc.PSI_PLUS)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
e_values = st.floats(min_value=0.0, max_value=0.5)


def test_depolarized_bell_state_examples():
    assert np.allclose(depolarized_bell_state(0), BELL)
    assert np.allclose(depolarized_bell_state(0.5), np.eye(4) / 4)
    assert np.allclose(np.sort(np.linalg.eigvalsh(depolarized_bell_state(0.2))), [0.1, 0.1, 0.1, 0.7])
    for bad in (-0.01, 0.51):
        with pytest.raises(InvalidArgument):
            depolarized_bell_state(bad)


@settings(max_examples=40, deadline=None)
@given(e_values)
def test_depolarized_bell_state_spectrum(e):
    rho = depolarized_bell_state(e)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho)), sorted([1 - 1.5 * e, e / 2, e / 2, e / 2]), atol=1e-12)


def test_protocol_povms_examples():
    six = protocol_povms("six-state")
    assert len(six.alice_povm) == len(six.bob_povm) == 6
    assert np.max(np.abs(six.alice_povm.elements.sum(0) - np.eye(2))) <= 1e-12
    assert np.allclose([np.trace(el).real for el in six.alice_povm.elements], 1 / 3)
    z_only = protocol_povms("four-state", weights=(1, 0))
    z = weighted_povm(("z",))
    assert np.allclose(z_only.alice_povm.elements[:2], z.elements)
    assert np.allclose(z_only.alice_povm.elements[2:], 0)
    with pytest.raises(InvalidArgument):
        protocol_povms("bb84-ish")
    with pytest.raises(InvalidArgument):
        protocol_povms("four-state", weights=(0.6, 0.6))
    with pytest.raises(InvalidArgument):
        protocol_povms("four-state", key_basis="y")


def test_four_state_bell_correlations():
    spec = protocol_povms("four-state")
    p = observed_distribution(BELL, spec)
    labels = spec.alice_povm.labels
    assert labels == ("z0", "z1", "x+", "x-")
    w = 0.5
    for basis in (slice(0, 2), slice(2, 4)):
        block = p[basis, basis]
        assert np.allclose(np.diag(block), w * w / 2)
        assert np.allclose(block[0, 1], 0) and np.allclose(block[1, 0], 0)


@settings(max_examples=30, deadline=None)
@given(e_values)
def test_six_state_qber_equals_e(e):
    spec = protocol_povms("six-state")
    p = observed_distribution(depolarized_bell_state(e), spec)
    assert p.sum() == pytest.approx(1, abs=1e-10)
    z = p[:2, :2]
    assert (z[0, 1] + z[1, 0]) / z.sum() == pytest.approx(e, abs=1e-12)


def test_six_state_loss_gives_vacuum_probability():
    spec = protocol_povms("six-state")
    p = observed_distribution(BELL, spec, DetectorSpec(0.0, efficiencies=0.15))
    assert spec.bob_povm.labels + (VAC,) == noisy_povm(spec.bob_povm, DetectorSpec(efficiencies=0.15)).labels
    assert p[:, -1].sum() == pytest.approx(0.85, abs=1e-12)


def test_key_basis_examples():
    spec = protocol_povms("six-state")
    p = key_basis_distribution(BELL, spec)
    assert np.allclose(p, np.diag([0.5, 0.5]))
    assert mutual_information(p) == pytest.approx(1)
    lossy = key_basis_distribution(BELL, spec, DetectorSpec(0.0, efficiencies=0.15))
    assert lossy.shape == (2, 3)
    assert mutual_information(lossy) == pytest.approx(0.15, abs=1e-12)
    for e in (0.02, 0.11, 0.3):
        bsc = key_basis_distribution(depolarized_bell_state(e), spec)
        assert mutual_information(bsc) == pytest.approx(1 - binary_entropy(e), abs=1e-12)


def test_dimension_mismatch():
    spec = protocol_povms("four-state")
    with pytest.raises(InvalidArgument):
        born_table(np.eye(6) / 6, spec.alice_povm, spec.bob_povm)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(min_value=0.0, max_value=1e-2), st.floats(min_value=0.05, max_value=1.0))
def test_marginals_follow_reduced_states(seed, d, eta):
    rng = np.random.default_rng(seed)
    rho = qc.random_density_matrix(4, rng)
    spec = protocol_povms("six-state")
    det = DetectorSpec(d, efficiencies=eta)
    p = observed_distribution(rho, spec, det)
    rho_a = qc.partial_trace(rho, [2, 2], 0)
    rho_b = qc.partial_trace(rho, [2, 2], 1)
    bob = noisy_povm(spec.bob_povm, det)
    # Bob's space carries a vacuum level only when losses are modelled
    rho_bob = np.zeros((bob.dim, bob.dim), dtype=complex)
    rho_bob[:2, :2] = rho_b
    pa = [np.trace(el @ rho_a).real for el in spec.alice_povm.elements]
    pb = [np.trace(el @ rho_bob).real for el in bob.elements]
    assert np.max(np.abs(p.sum(1) - pa)) <= 1e-10
    assert np.max(np.abs(p.sum(0) - pb)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(e_values, st.floats(min_value=0.05, max_value=0.95))
def test_key_distribution_ignores_weights(e, wz):
    rho = depolarized_bell_state(e)
    base = key_basis_distribution(rho, protocol_povms("four-state"))
    other = key_basis_distribution(rho, protocol_povms("four-state", weights=(wz, 1 - wz)))
    assert np.array_equal(base, other)
    assert other.sum() == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("e", [0.0, 0.1, 0.25, 0.5])
def test_six_state_statistics_fix_the_state(e):
    spec = protocol_povms("six-state")
    rho = depolarized_bell_state(e)
    p, bob = tomography_distribution(rho, spec)
    result = max_separable_weight(EquivalenceClassSpec(spec.tomography_povm, bob, p))
    assert np.max(np.abs(result.rho_star - rho)) <= 1e-7
