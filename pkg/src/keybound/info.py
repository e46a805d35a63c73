"""Shannon-type information measures, intrinsic information, and ccq states.

Joint distributions are numpy arrays whose axes are the parties' alphabets
(Alice, Bob[, Eve]). All quantities are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from . import quantum as qc
from .errors import InvalidArgument, UnsupportedSize

NEG_TOL = 1e-12
SUM_TOL = 1e-10
EVENT_CUTOFF = 1e-14
MAX_EVE_ALPHABET = 6


def joint_distribution(p, parties: int | None = None) -> np.ndarray:
    """Validate a probability table, clamping tiny negative round-off to zero."""
    p = np.asarray(p, dtype=float)
    if parties is not None and p.ndim != parties:
        raise InvalidArgument(f"expected a {parties}-party table, got {p.ndim} axes")
    if p.size == 0:
        raise InvalidArgument("empty probability table")
    if np.any(p < -NEG_TOL):
        raise InvalidArgument(f"negative probability {p.min():.3g}")
    if abs(p.sum() - 1) > SUM_TOL:
        raise InvalidArgument(f"probabilities sum to {p.sum()!r}, expected 1")
    return np.clip(p, 0.0, None)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(p) -> float:
    """H(X) = -sum p log2 p with 0 log 0 = 0."""
    p = joint_distribution(p)
    return max(0.0, _entropy(p.reshape(-1)))


def binary_entropy(x: float) -> float:
    x = float(x)
    if x <= 0 or x >= 1:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def mutual_information(p) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B) of a two-party table."""
    p = joint_distribution(p, parties=2)
    value = _entropy(p.sum(1)) + _entropy(p.sum(0)) - _entropy(p.reshape(-1))
    return max(0.0, value)


def _cmi(p: np.ndarray) -> float:
    # H(A,E) + H(B,E) - H(A,B,E) - H(E), events with P(e) below cutoff dropped
    pe = p.sum(axis=(0, 1))
    mask = pe >= EVENT_CUTOFF
    if not np.any(mask):
        return 0.0
    p = p[:, :, mask]
    pe = pe[mask]
    value = _entropy(p.sum(1)) + _entropy(p.sum(0)) - _entropy(p) - _entropy(pe)
    return max(0.0, value)


def conditional_mutual_information(p) -> float:
    """I(A;B|E) = sum_e P(e) [H(A|e) + H(B|e) - H(A,B|e)]."""
    return _cmi(joint_distribution(p, parties=3))


def apply_channel(p, channel) -> np.ndarray:
    """Push Eve's variable through a row-stochastic channel P(ebar|e)."""
    return np.einsum("abe,ef->abf", np.asarray(p, dtype=float), np.asarray(channel, dtype=float))


def validate_channel(channel) -> np.ndarray:
    channel = np.asarray(channel, dtype=float)
    if channel.ndim != 2:
        raise InvalidArgument("channel must be a matrix")
    if np.any(channel < -NEG_TOL) or np.any(channel > 1 + NEG_TOL):
        raise InvalidArgument("channel entries must lie in [0, 1]")
    if np.any(np.abs(channel.sum(1) - 1) > SUM_TOL):
        raise InvalidArgument("channel rows must sum to 1")
    return np.clip(channel, 0.0, 1.0)


@dataclass(frozen=True)
class SearchConfig:
    """Effort settings for :func:`intrinsic_information`."""

    starts: int = 20
    max_iter: int = 500
    tol: float = 1e-9
    refine_sweeps: int = 3
    seed: int = 0


class IntrinsicResult(NamedTuple):
    value: float
    channel: np.ndarray


def _project_rows_to_simplex(v: np.ndarray) -> np.ndarray:
    # Euclidean projection of each row onto the probability simplex
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def _cmi_grad(p: np.ndarray, channel: np.ndarray) -> np.ndarray:
    q = apply_channel(p, channel)
    eps = 1e-300
    qab = np.maximum(q, eps)
    qa = np.maximum(q.sum(1), eps)[:, None, :]
    qb = np.maximum(q.sum(0), eps)[None, :, :]
    qe = np.maximum(q.sum((0, 1)), eps)[None, None, :]
    dq = np.log2(qab) + np.log2(qe) - np.log2(qa) - np.log2(qb)
    return np.einsum("abe,abf->ef", p, dq)


def _descend(p: np.ndarray, channel: np.ndarray, cfg: SearchConfig) -> tuple[float, np.ndarray]:
    value = _cmi(apply_channel(p, channel))
    step = 1.0
    for _ in range(cfg.max_iter):
        grad = _cmi_grad(p, channel)
        improved = False
        while step > 1e-12:
            trial = _project_rows_to_simplex(channel - step * grad)
            trial_value = _cmi(apply_channel(p, trial))
            if trial_value < value - 1e-4 * np.sum(grad * (channel - trial)) or trial_value < value - cfg.tol:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = value - trial_value
        channel, value = trial, trial_value
        step = min(step * 2.0, 1e3)
        if gain < cfg.tol:
            break
    return value, channel


def _refine(p: np.ndarray, channel: np.ndarray, value: float, cfg: SearchConfig) -> tuple[float, np.ndarray]:
    # coordinate steps: move mass between two outputs of one row
    n_in, n_out = channel.shape
    for _ in range(cfg.refine_sweeps):
        start_value = value
        for e in range(n_in):
            for j in range(n_out):
                for k in range(j + 1, n_out):
                    total = channel[e, j] + channel[e, k]
                    if total <= 0:
                        continue

                    def f(t, e=e, j=j, k=k, total=total):
                        trial = channel.copy()
                        trial[e, j], trial[e, k] = t * total, (1 - t) * total
                        return _cmi(apply_channel(p, trial))

                    res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-7})
                    if res.fun < value:
                        channel = channel.copy()
                        channel[e, j], channel[e, k] = res.x * total, (1 - res.x) * total
                        value = float(res.fun)
        if start_value - value < cfg.tol:
            break
    return value, channel


def _grid_seed_2x2(p: np.ndarray, steps: int = 50) -> np.ndarray:
    t = np.linspace(0.0, 1.0, steps + 1)
    best, best_ch = np.inf, None
    for a in t:
        for b in t:
            ch = np.array([[a, 1 - a], [b, 1 - b]])
            v = _cmi(apply_channel(p, ch))
            if v < best:
                best, best_ch = v, ch
    return best_ch


def intrinsic_information(p, search: SearchConfig | None = None) -> IntrinsicResult:
    """Upper estimate of min over channels E -> Ebar (|Ebar| = |E|) of I(A;B|Ebar).

    Multi-start projected gradient descent over row-stochastic matrices,
    starting from the identity, a constant channel, ``search.starts`` random
    channels and (for binary E) the best point of a coarse grid; the winner
    is polished by one-dimensional bounded searches along coordinate pairs.
    """
    cfg = search or SearchConfig()
    p = joint_distribution(p, parties=3)
    n = p.shape[2]
    if n > MAX_EVE_ALPHABET:
        raise UnsupportedSize(f"Eve alphabet of size {n} exceeds {MAX_EVE_ALPHABET}")
    rng = np.random.default_rng(cfg.seed)
    starts = [np.eye(n), np.tile(np.eye(n)[0], (n, 1))]
    if n == 2:
        starts.append(_grid_seed_2x2(p))
    starts += [rng.dirichlet(np.ones(n), size=n) for _ in range(cfg.starts)]

    best_value, best_channel = np.inf, None
    for ch in starts:
        value, ch = _descend(p, ch, cfg)
        # strict comparison keeps the earliest start on ties
        if value < best_value - 1e-15:
            best_value, best_channel = value, ch
    best_value, best_channel = _refine(p, best_channel, best_value, cfg)
    return IntrinsicResult(float(best_value), best_channel)


@dataclass(frozen=True)
class CcqState:
    """Classical-classical-quantum state: unnormalized Eve operators per (i, j)."""

    eve_blocks: np.ndarray  # shape (nA, nB, dE, dE)

    @property
    def ab_alphabet(self) -> tuple[int, int]:
        return self.eve_blocks.shape[0], self.eve_blocks.shape[1]

    def probabilities(self) -> np.ndarray:
        return np.einsum("ijkk->ij", self.eve_blocks).real


def ccq_state(rho_abe, alice, bob, dims) -> CcqState:
    """rho_E^{ij} = Tr_AB((A_i x B_j x 1) rho_ABE).

    ``alice`` and ``bob`` are POVMs (objects with an ``elements`` array or
    plain ``(n, d, d)`` arrays); ``dims`` is ``(dA, dB, dE)``.
    """
    a = np.asarray(getattr(alice, "elements", alice), dtype=complex)
    b = np.asarray(getattr(bob, "elements", bob), dtype=complex)
    rho = np.asarray(rho_abe, dtype=complex)
    if len(dims) != 3:
        raise InvalidArgument("ccq_state needs dims (dA, dB, dE)")
    da, db, de = (int(d) for d in dims)
    if a.shape[1:] != (da, da) or b.shape[1:] != (db, db) or rho.shape != (da * db * de,) * 2:
        raise InvalidArgument("POVM or state dimensions do not match dims")
    t = rho.reshape(da, db, de, da, db, de)
    # Tr_AB[(A_i x B_j) rho] = sum A_i[y,x] B_j[w,v] rho[x,v,e,y,w,f]
    blocks = np.einsum("iyx,jwv,xveywf->ijef", a, b, t)
    blocks = (blocks + np.conj(np.swapaxes(blocks, 2, 3))) / 2
    return CcqState(blocks)


def measured_quantum_intrinsic(ccq: CcqState, eve_povm) -> float:
    """sum_k p(e_k) S(A;B)_{e_k} for one fixed measurement of Eve.

    The conditional state given outcome k is the diagonal (classical) state
    with entries Tr(E_k rho_E^{ij}) / p(e_k).
    """
    e = np.asarray(getattr(eve_povm, "elements", eve_povm), dtype=complex)
    de = ccq.eve_blocks.shape[2]
    if e.ndim != 3 or e.shape[1:] != (de, de):
        raise InvalidArgument("Eve POVM does not act on the Eve block dimension")
    if np.max(np.abs(e.sum(0) - np.eye(de))) > 1e-9:
        raise InvalidArgument("Eve POVM is not complete")
    na, nb = ccq.ab_alphabet
    p_ijk = np.einsum("kfe,ijef->ijk", e, ccq.eve_blocks).real
    total = 0.0
    for k in range(e.shape[0]):
        pk = p_ijk[:, :, k].sum()
        if pk < EVENT_CUTOFF:
            continue
        cond = np.diag((p_ijk[:, :, k] / pk).reshape(-1)).astype(complex)
        total += pk * qc.quantum_mutual_information(cond, [na, nb])
    return float(total)


def distribution_to_json(p) -> dict:
    p = np.asarray(p, dtype=float)
    return {"shape": list(p.shape), "probs": [float(x) for x in p.reshape(-1)]}


def distribution_from_json(obj: dict) -> np.ndarray:
    try:
        shape = [int(s) for s in obj["shape"]]
        probs = np.asarray(obj["probs"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed distribution object: {exc}") from exc
    if probs.size != int(np.prod(shape)):
        raise InvalidArgument(f"{probs.size} probabilities do not fill shape {shape}")
    return joint_distribution(probs.reshape(shape))
