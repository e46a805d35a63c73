"""Upper bounds on QKD secret key rates from the best separable approximation.

Trusted detectors may be noisy (dark counts) and lossy (finite efficiency).
"""

from .bounds import (BoundReport, StateBound, corollary2_bound, mutual_info_bound, relative_entropy_bell_diagonal,
                     reports_to_csv, reports_to_json, scan, state_bound)
from .bsa import (BsaResult, EquivalenceClassSpec, build_bsa_sdp, max_separable_weight, separability_verdict,
                  state_face)
from .detectors import (DetectorSpec, Povm, apply_dark_counts, apply_efficiency, dark_count_forward, embed_state,
                        invert_dark_counts, invert_efficiency, noisy_povm)
from .errors import (InconsistentStatistics, InvalidArgument, KeyboundError, NumericalFailure, UnsupportedDimension,
                     UnsupportedSize)
from .info import (SearchConfig, ccq_state, conditional_mutual_information, intrinsic_information,
                   measured_quantum_intrinsic, mutual_information, shannon_entropy)
from .protocols import (ProtocolSpec, depolarized_bell_state, key_basis_distribution, observed_distribution,
                        protocol_povms)
from .quantum import (eig_hermitian, is_psd, partial_trace, partial_transpose, purify, tensor,
                      von_neumann_entropy)
from .sdp import SdpProblem, SdpSolution, SolverOptions, hermitian_to_real_embedding, solve

__version__ = "0.1.0"
