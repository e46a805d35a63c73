"""Maximum weight of separability over the states compatible with observed data.

For local dimensions with dA * dB <= 6 separability coincides with a
positive partial transpose, so the problem

    maximize   Tr(sigma)
    subject to rho >= 0, Tr rho = 1, Tr[(A_i x B_j) rho] = p_ij,
               sigma >= 0, sigma^{T_B} >= 0, rho - sigma >= 0

is a semidefinite program. Complex Hermitian variables are carried through
the real embedding of :func:`keybound.sdp.hermitian_to_real`; each of
rho, sigma, sigma^{T_B} and rho - sigma gets its own PSD block, the last two
tied to the first two by linear equalities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quantum as qc
from .detectors import Povm
from .errors import InconsistentStatistics, InvalidArgument, NumericalFailure, UnsupportedDimension
from .info import joint_distribution
from .sdp import (INFEASIBLE, OPTIMAL, SdpProblem, SdpSolution, SolverOptions, hermitian_to_real,
                  real_to_hermitian, solve)

SEPARABLE_THRESHOLD = 1 - 1e-7
MAX_PPT_EXACT_DIM = 6
BSA_OPTIONS = SolverOptions(feastol=1e-9, gaptol=1e-9)
FACE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EquivalenceClassSpec:
    """Alice's and Bob's POVMs and the (noise-free) joint outcome table they produced."""

    alice_povm: Povm
    bob_povm: Povm
    observed: np.ndarray

    def __post_init__(self):
        p = joint_distribution(self.observed, parties=2)
        if p.shape != (len(self.alice_povm), len(self.bob_povm)):
            raise InvalidArgument(
                f"observed table has shape {p.shape}, POVMs have "
                f"{len(self.alice_povm)} x {len(self.bob_povm)} outcomes"
            )
        object.__setattr__(self, "observed", p)

    @property
    def dims(self) -> tuple[int, int]:
        return self.alice_povm.dim, self.bob_povm.dim

    def to_json(self) -> dict:
        from .info import distribution_to_json

        return {
            "alice_povm": self.alice_povm.to_json(),
            "bob_povm": self.bob_povm.to_json(),
            "observed": distribution_to_json(self.observed),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EquivalenceClassSpec":
        from .info import distribution_from_json

        try:
            alice = Povm.from_json(obj["alice_povm"])
            bob = Povm.from_json(obj["bob_povm"])
            observed = obj["observed"]
        except KeyError as exc:
            raise InvalidArgument(f"missing field {exc} in equivalence-class input") from exc
        if isinstance(observed, dict):
            observed = distribution_from_json(observed)
        return cls(alice, bob, np.asarray(observed, dtype=float))


@dataclass(eq=False)
class BsaResult:
    lambda_max: float
    rho_star: np.ndarray
    sigma_sep: np.ndarray | None
    rho_ent: np.ndarray | None
    duality_gap: float
    dims: tuple[int, int]
    solution: SdpSolution | None = None
    face: np.ndarray | None = None
    sigma_raw: np.ndarray | None = None
    sigma_pt_raw: np.ndarray | None = None

    @property
    def status(self) -> str:
        return "" if self.solution is None else self.solution.status

    @property
    def separable_compatible(self) -> bool:
        return self.lambda_max >= SEPARABLE_THRESHOLD

    def decomposition_residual(self) -> float:
        """||lambda sigma_sep + (1 - lambda) rho_ent - rho*||_F (0 when a part is absent)."""
        lam = self.lambda_max
        recon = np.zeros_like(self.rho_star)
        if self.sigma_sep is not None:
            recon = recon + lam * self.sigma_sep
        if self.rho_ent is not None:
            recon = recon + (1 - lam) * self.rho_ent
        elif self.sigma_sep is not None:
            recon = self.sigma_sep
        return float(np.linalg.norm(recon - self.rho_star))

    def to_json(self) -> dict:
        def mat(m):
            return None if m is None else qc.matrix_to_json(m)

        return {
            "lambda_max": self.lambda_max,
            "separable_compatible": self.separable_compatible,
            "dims": list(self.dims),
            "rho_star": mat(self.rho_star),
            "sigma_sep": mat(self.sigma_sep),
            "rho_ent": mat(self.rho_ent),
            "duality_gap": self.duality_gap,
            "solver_status": self.status,
            "face_dim": None if self.face is None else int(self.face.shape[1]),
        }


def hermitian_basis(n: int) -> np.ndarray:
    """Orthogonal basis of n x n Hermitian matrices (n^2 elements)."""
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1
        basis.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = e[k, j] = 1
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[j, k], e[k, j] = -1j, 1j
            basis.append(e)
    return np.array(basis)


def _trace_functional(h: np.ndarray) -> np.ndarray:
    # <emb(h)/2, emb(x)> = Re Tr(h x) for Hermitian h, x
    return hermitian_to_real(h) / 2


RHO, SIGMA, SIGMA_PT, REMAINDER = range(4)


def _check_dims(spec: EquivalenceClassSpec) -> int:
    da, db = spec.dims
    n = da * db
    if n > MAX_PPT_EXACT_DIM:
        raise UnsupportedDimension(
            f"local dimensions {da}x{db}: positive partial transpose characterizes "
            f"separability only up to total dimension {MAX_PPT_EXACT_DIM}"
        )
    return n


def _data_rows(spec: EquivalenceClassSpec):
    n = spec.dims[0] * spec.dims[1]
    yield np.eye(n), 1.0
    for i, a in enumerate(spec.alice_povm.elements):
        for j, b in enumerate(spec.bob_povm.elements):
            yield np.kron(a, b), float(spec.observed[i, j])


def build_bsa_sdp(spec: EquivalenceClassSpec, face: np.ndarray | None = None) -> SdpProblem:
    """Standard-form SDP whose optimal value is -lambda_max.

    Block order: rho, sigma, sigma^{T_B}, rho - sigma (each the real
    embedding of a Hermitian matrix). With ``face`` (an isometry V of shape
    (dA*dB, r)), rho, sigma and rho - sigma are written as V W V^dagger with
    r x r blocks W; sigma^{T_B} keeps the full dimension.
    """
    da, db = spec.dims
    n = _check_dims(spec)
    v = np.eye(n) if face is None else np.asarray(face)
    r = v.shape[1]

    def functional(h):
        return _trace_functional(v.conj().T @ h @ v)

    sizes = (2 * r, 2 * r, 2 * n, 2 * r)
    zeros = [np.zeros((k, k)) for k in sizes]
    rows: list[tuple[list[np.ndarray], float]] = []

    def row(**blocks):
        mats = list(zeros)
        for key, m in blocks.items():
            mats[{"rho": RHO, "sigma": SIGMA, "pt": SIGMA_PT, "rem": REMAINDER}[key]] = m
        return mats

    for h, val in _data_rows(spec):
        rows.append((row(rho=functional(h)), val))
    for e in hermitian_basis(n):
        pt_e = qc.partial_transpose(e, [da, db], 1)
        rows.append((row(pt=_trace_functional(e), sigma=-functional(pt_e)), 0.0))
    for e in hermitian_basis(r):
        f = _trace_functional(e)
        rows.append((row(rem=f, rho=-f, sigma=f), 0.0))

    a = tuple(np.array([rw[0][p] for rw in rows]) for p in range(4))
    b = np.array([rw[1] for rw in rows])
    c = list(zeros)
    c[SIGMA] = -_trace_functional(np.eye(r))
    return SdpProblem(sizes, tuple(c), a, b)


def state_face(spec: EquivalenceClassSpec, options: SolverOptions | None = None,
               tol: float = FACE_TOL) -> np.ndarray:
    """Isometry onto the smallest subspace containing every state that fits the data.

    An interior-point solve of the bare feasibility problem tends to the
    relative interior of the feasible set, so the eigenvectors of its
    solution with non-negligible eigenvalues span the face all compatible
    states live on.
    """
    n = _check_dims(spec)
    rows = list(_data_rows(spec))
    a = np.array([_trace_functional(h) for h, _ in rows])
    b = np.array([val for _, val in rows])
    sol = solve(SdpProblem((2 * n,), (np.zeros((2 * n, 2 * n)),), (a,), b), options or BSA_OPTIONS)
    if sol.status == INFEASIBLE:
        raise InconsistentStatistics("no quantum state reproduces the observed statistics p_ij")
    if not sol.acceptable:
        return np.eye(n)
    w, vecs = np.linalg.eigh(real_to_hermitian(sol.primal[0]))
    return vecs[:, w > tol * max(1.0, w[-1])]


def max_separable_weight(spec: EquivalenceClassSpec, options: SolverOptions | None = None) -> BsaResult:
    """Solve the BSA program and split the optimal state into its two parts.

    If the data pin the state to a rank-deficient face, the full program has
    no strictly feasible point and the solver may stall; it is then re-solved
    on that face. Raises :class:`InconsistentStatistics` if no quantum state
    reproduces the data and :class:`NumericalFailure` if neither attempt
    converges.
    """
    opts = options or BSA_OPTIONS
    n = _check_dims(spec)
    sol = solve(build_bsa_sdp(spec), opts)
    if sol.status == INFEASIBLE:
        raise InconsistentStatistics("no quantum state reproduces the observed statistics p_ij")
    face = None
    if not sol.optimal:
        v = state_face(spec, opts)
        if v.shape[1] < n:
            reduced = solve(build_bsa_sdp(spec, v), opts)
            if reduced.optimal or (reduced.acceptable and not sol.acceptable):
                sol, face = reduced, v
    if not sol.acceptable:
        best = None if not np.isfinite(sol.primal_objective) else float(-sol.primal_objective)
        raise NumericalFailure(f"SDP solver stopped with status {sol.status!r}", best_bound=best)
    return _extract(sol, spec.dims, face)


def _to_state(m: np.ndarray) -> np.ndarray:
    # clip solver round-off below zero, then renormalize
    w, v = np.linalg.eigh(qc.hermitian(m, tol=1e-6))
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def _lift(x: np.ndarray, face: np.ndarray | None) -> np.ndarray:
    h = real_to_hermitian(x)
    return h if face is None else face @ h @ face.conj().T


def _extract(sol: SdpSolution, dims: tuple[int, int], face: np.ndarray | None = None) -> BsaResult:
    rho_raw = _lift(sol.primal[RHO], face)
    sigma = _lift(sol.primal[SIGMA], face)
    rho = _to_state(rho_raw)
    lam = float(np.clip(np.trace(sigma).real, 0.0, 1.0))
    sigma_sep = _to_state(sigma) if lam > 1e-12 else None
    if lam >= SEPARABLE_THRESHOLD:
        rho_ent = None
    else:
        rho_ent = _to_state(rho_raw - sigma)
    return BsaResult(lam, rho, sigma_sep, rho_ent, sol.duality_gap, dims, sol, face,
                     sigma_raw=sigma, sigma_pt_raw=real_to_hermitian(sol.primal[SIGMA_PT]))


def separability_verdict(spec: EquivalenceClassSpec, options: SolverOptions | None = None) -> bool:
    """True iff the data could have come from a separable state."""
    return max_separable_weight(spec, options).separable_compatible
