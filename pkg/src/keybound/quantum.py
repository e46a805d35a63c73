"""Finite-dimensional quantum objects on top of plain numpy arrays.

Matrices are ``numpy.ndarray`` of complex dtype. Composite systems use the
Kronecker convention with the first subsystem (Alice) as the slowest-varying
index.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidArgument

HERMITIAN_TOL = 1e-12
EIG_CUTOFF = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PSI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``m`` as a complex Hermitian matrix.

    Asymmetry up to ``tol`` (relative to ``max(1, |m|)``) is absorbed by
    symmetrizing; anything larger raises :class:`InvalidArgument`.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidArgument(f"expected a non-empty square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m))))
    if asym > tol * scale:
        raise InvalidArgument(f"matrix is not Hermitian (asymmetry {asym:.3g})")
    return (m + m.conj().T) / 2


def density_matrix(m, dims: Sequence[int] | None = None) -> np.ndarray:
    """Validate ``m`` as a density matrix (unit trace, PSD) and return it."""
    rho = hermitian(m)
    if dims is not None and int(np.prod(dims)) != rho.shape[0]:
        raise InvalidArgument(f"subsystem dims {list(dims)} do not match dimension {rho.shape[0]}")
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL:
        raise InvalidArgument(f"density matrix trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise InvalidArgument("density matrix is not positive semidefinite")
    return rho


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return v


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def tensor(*mats) -> np.ndarray:
    """Kronecker product of the arguments, left factor slowest-varying."""
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise InvalidArgument(f"dims {dims} incompatible with matrix of shape {m.shape}")
    return dims


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``keep`` is a subsystem index or a sequence of indices (kept in
    increasing order).
    """
    m = np.asarray(m, dtype=complex)
    dims = _check_dims(m, dims)
    keep = sorted([keep] if np.isscalar(keep) else list(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise InvalidArgument(f"subsystem index out of range for dims {dims}")
    t = m.reshape(dims + dims)
    # trace from the highest index down so axis numbers stay valid
    for sub in reversed(range(n)):
        if sub in keep:
            continue
        cur = t.ndim // 2
        t = np.trace(t, axis1=sub, axis2=sub + cur)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def partial_transpose(m, dims: Sequence[int], which: int = 1) -> np.ndarray:
    """Transpose subsystem ``which`` (default: the second one, Bob)."""
    m = np.asarray(m, dtype=complex)
    dims = _check_dims(m, dims)
    n = len(dims)
    if not 0 <= which < n:
        raise InvalidArgument(f"subsystem index {which} out of range for dims {dims}")
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[which], axes[which + n] = axes[which + n], axes[which]
    return t.transpose(axes).reshape(m.shape)


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    h = hermitian(m)
    w, v = np.linalg.eigh(h)
    return w[::-1], v[:, ::-1]


def is_psd(m, tol: float = PSD_TOL) -> bool:
    return bool(np.linalg.eigvalsh(hermitian(m))[0] >= -tol)


def purify(rho) -> np.ndarray:
    """Purification sum_k sqrt(p_k) |v_k>|k> with one ancilla level per nonzero eigenvalue.

    The returned vector lives on ``dim(rho) * rank`` dimensions, system first
    and ancilla last.
    """
    w, v = eig_hermitian(rho)
    keep = w > EIG_CUTOFF
    w, v = w[keep], v[:, keep]
    rank = len(w)
    psi = np.zeros((v.shape[0], rank), dtype=complex)
    psi[:, :] = v * np.sqrt(w)
    return psi.reshape(-1)


def von_neumann_entropy(rho) -> float:
    """S(rho) = -Tr rho log2 rho, in bits."""
    w = np.linalg.eigvalsh(hermitian(rho))
    w = w[w > EIG_CUTOFF]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def quantum_mutual_information(rho, dims: Sequence[int]) -> float:
    """S(A) + S(B) - S(AB) for a bipartite state."""
    return (
        von_neumann_entropy(partial_trace(rho, dims, 0))
        + von_neumann_entropy(partial_trace(rho, dims, 1))
        - von_neumann_entropy(rho)
    )


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Hilbert-Schmidt for full rank) measure."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "re": [float(x) for x in m.real.reshape(-1)],
        "im": [float(x) for x in m.imag.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * dim * dim), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed matrix object: {exc}") from exc
    if re.size != dim * dim or im.size != dim * dim:
        raise InvalidArgument(f"matrix entries do not match dim={dim}")
    return hermitian((re + 1j * im).reshape(dim, dim), tol=1e-9)
