"""Split observed statistics into a separable and an entangled part.

Run with ``python3 demos/separable_weight.py``. Three states are measured
with the six-state POVM; for each, the largest separable weight lambda_max
compatible with the statistics is found and the remaining entangled part is
inspected.
"""

import numpy as np

from keybound import quantum as qc
from keybound.bsa import EquivalenceClassSpec, max_separable_weight
from keybound.protocols import depolarized_bell_state, protocol_povms, tomography_distribution

POVMS = protocol_povms("six-state")
PLUS = np.array([1, 1]) / np.sqrt(2)

STATES = {
    "depolarized Bell state, e = 0.1": depolarized_bell_state(0.1),
    "product |0>|+>": np.kron(qc.projector(qc.ket(0, 2)), qc.projector(PLUS)),
    # rank two, so the statistics pin the state to a two-dimensional face
    "0.6 |psi+><psi+| + 0.4 |01><01|": 0.6 * qc.projector(qc.PSI_PLUS) + 0.4 * np.diag([0.0, 1.0, 0.0, 0.0]),
}


def describe(name, rho):
    table, bob = tomography_distribution(rho, POVMS)
    result = max_separable_weight(EquivalenceClassSpec(POVMS.tomography_povm, bob, table))
    print(f"\n{name}")
    print(f"  lambda_max = {result.lambda_max:.6f}  (solver: {result.status})")
    if result.face is not None:
        print(f"  solved on a face of dimension {result.face.shape[1]}")
    if result.separable_compatible:
        print("  the statistics could come from a separable state, so no key can be certified")
        return
    ent = result.rho_ent
    purity = np.trace(ent @ ent).real
    overlap = np.real(qc.PSI_PLUS.conj() @ ent @ qc.PSI_PLUS)
    print(f"  entangled part: purity {purity:.6f}, overlap with |psi+> {overlap:.6f}")
    print(f"  reconstruction error {result.decomposition_residual():.2e}")


if __name__ == "__main__":
    for name, rho in STATES.items():
        describe(name, rho)
