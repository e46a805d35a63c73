"""Trusted-detector correction, step by step.

Run with ``python3 demos/detector_correction.py``. Dark counts and losses
are applied to Bob's key-basis measurement of a Bell state, the resulting
table is printed, and the trusted-device inversion recovers the ideal
statistics.
"""

import numpy as np

from keybound import DetectorSpec
from keybound.detectors import dark_count_forward, invert_dark_counts, noisy_povm
from keybound.protocols import depolarized_bell_state, key_basis_distribution, protocol_povms

np.set_printoptions(precision=6, suppress=True)

if __name__ == "__main__":
    spec = protocol_povms("six-state")
    rho = depolarized_bell_state(0.05)
    detectors = DetectorSpec(1e-3, efficiencies=0.5)

    # Bob's z measurement gains a vacuum outcome once losses are modelled
    bob = noisy_povm(spec.key_povm, detectors)
    print("Bob's key-basis outcomes:", bob.labels)
    print("dark-count probability per click outcome:", detectors.split_for(2))

    print("\nideal key-basis table")
    print(key_basis_distribution(rho, spec))
    print("\nwith dark counts and 50% efficiency")
    print(key_basis_distribution(rho, spec, detectors))

    # inversion of the dark-count map alone, on a click-only table
    ideal = key_basis_distribution(rho, spec)
    dark = DetectorSpec(1e-3)
    noisy = dark_count_forward(ideal, dark)
    back = invert_dark_counts(noisy, dark)
    print(f"\ndark-count round trip error: {np.max(np.abs(back - ideal)):.1e}")
