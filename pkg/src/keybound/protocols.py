"""Four-state and six-state protocols on the effective two-qubit picture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import quantum as qc
from .detectors import DetectorSpec, Povm, embed_state, noisy_povm
from .errors import InvalidArgument

PROTOCOL_BASES = {
    "four-state": ("z", "x"),
    "six-state": ("z", "x", "y"),
}

_PAULI = {"x": qc.PAULI_X, "y": qc.PAULI_Y, "z": qc.PAULI_Z}
_OUTCOME_NAMES = {"z": ("0", "1"), "x": ("+", "-"), "y": ("+i", "-i")}


def basis_projectors(basis: str) -> np.ndarray:
    """Eigenprojectors of a Pauli operator, +1 eigenvalue first."""
    w, v = qc.eig_hermitian(_PAULI[basis])
    return np.array([qc.projector(v[:, k]) for k in range(2)])


def weighted_povm(bases: Sequence[str], weights: Sequence[float] | None = None) -> Povm:
    """Choose basis b with probability weights[b], then measure it projectively."""
    weights = np.full(len(bases), 1 / len(bases)) if weights is None else np.asarray(weights, dtype=float)
    if len(weights) != len(bases) or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise InvalidArgument(f"basis weights {list(weights)} must be a probability vector over {list(bases)}")
    elements, labels = [], []
    for b, w in zip(bases, weights):
        for proj, name in zip(basis_projectors(b), _OUTCOME_NAMES[b]):
            elements.append(w * proj)
            labels.append(f"{b}{name}")
    return Povm(np.array(elements), tuple(labels))


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    name: str
    alice_povm: Povm
    bob_povm: Povm
    key_basis: str = "z"
    weights: tuple[float, ...] | None = None

    @property
    def bases(self) -> tuple[str, ...]:
        return PROTOCOL_BASES[self.name]

    @property
    def tomography_povm(self) -> Povm:
        """Equal-weight POVM used to build equivalence-class constraints."""
        return weighted_povm(self.bases)

    @property
    def key_povm(self) -> Povm:
        return weighted_povm((self.key_basis,))


def protocol_povms(name: str, weights: Sequence[float] | None = None, key_basis: str = "z") -> ProtocolSpec:
    if name not in PROTOCOL_BASES:
        raise InvalidArgument(f"unknown protocol {name!r}; expected one of {sorted(PROTOCOL_BASES)}")
    bases = PROTOCOL_BASES[name]
    if key_basis not in bases:
        raise InvalidArgument(f"key basis {key_basis!r} is not measured by {name}")
    povm = weighted_povm(bases, weights)
    w = None if weights is None else tuple(float(x) for x in weights)
    return ProtocolSpec(name, povm, povm, key_basis, w)


def check_channel_param(e: float) -> float:
    e = float(e)
    if not 0.0 <= e <= 0.5:
        raise InvalidArgument(f"channel parameter e={e} outside [0, 1/2]")
    return e


def depolarized_bell_state(e: float) -> np.ndarray:
    """(1 - 2e) |psi+><psi+| + (e/2) 1."""
    e = check_channel_param(e)
    return (1 - 2 * e) * qc.projector(qc.PSI_PLUS) + e / 2 * np.eye(4)


def born_table(rho, alice: Povm, bob: Povm) -> np.ndarray:
    """p_ij = Tr[(A_i x B_j) rho]."""
    rho = np.asarray(rho, dtype=complex)
    da, db = alice.dim, bob.dim
    if rho.shape != (da * db, da * db):
        raise InvalidArgument(f"state of shape {rho.shape} does not match POVM dims ({da}, {db})")
    t = rho.reshape(da, db, da, db)
    p = np.einsum("iyx,jwv,xvyw->ij", alice.elements, bob.elements, t).real
    return np.where(np.abs(p) < 1e-15, 0.0, p)


def _measure(rho, alice: Povm, bob: Povm, detectors: DetectorSpec | None) -> tuple[np.ndarray, Povm]:
    bob_noisy = noisy_povm(bob, detectors)
    if bob_noisy.dim != bob.dim:
        rho = embed_state(rho, (alice.dim, bob.dim))
    return born_table(rho, alice, bob_noisy), bob_noisy


def observed_distribution(rho, spec: ProtocolSpec, detectors: DetectorSpec | None = None) -> np.ndarray:
    """Joint statistics of the protocol POVMs, Bob's side passed through his detectors."""
    return _measure(rho, spec.alice_povm, spec.bob_povm, detectors)[0]


def tomography_distribution(rho, spec: ProtocolSpec, detectors: DetectorSpec | None = None):
    """Equal-weight statistics and the noisy Bob POVM that produced them."""
    povm = spec.tomography_povm
    return _measure(rho, povm, povm, detectors)


def key_basis_distribution(rho, spec: ProtocolSpec, detectors: DetectorSpec | None = None) -> np.ndarray:
    """Statistics conditioned on both parties measuring the key basis.

    Includes Bob's ``vac`` column when losses are modelled.
    """
    povm = spec.key_povm
    return _measure(rho, povm, povm, detectors)[0]
