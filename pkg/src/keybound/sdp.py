"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Problems are in standard primal form::

    minimize    <C, X>
    subject to  <A_k, X> = b_k,   k = 1..m
                X = diag(X_1, ..., X_p) >= 0

with dual ``maximize b'y  s.t.  sum_k y_k A_k + S = C,  S >= 0``.

The solver runs on the homogeneous self-dual embedding (variables X, y, S
plus the scalars tau and kappa), so infeasible problems end with a Farkas
certificate instead of diverging. Search directions use Nesterov-Todd
scaling and a Mehrotra predictor-corrector; the Schur complement is formed
densely and factored by Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgument

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DUAL_INFEASIBLE = "dual-infeasible"
MAX_ITER = "max-iter"
NEAR_OPTIMAL = "near-optimal"

STALL_ITERATIONS = 8
REFINE_ROUNDS = 3


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Block SDP data.

    ``c[p]`` is the objective block ``p`` (shape ``(n_p, n_p)``), ``a[p]``
    stacks the constraint blocks as shape ``(m, n_p, n_p)`` and ``b`` has
    shape ``(m,)``.
    """

    blocks: tuple[int, ...]
    c: tuple[np.ndarray, ...]
    a: tuple[np.ndarray, ...]
    b: np.ndarray

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = tuple(np.asarray(x, dtype=float) for x in self.c)
        a = tuple(np.asarray(x, dtype=float).reshape(len(b), n, n) for x, n in zip(self.a, blocks))
        if len(c) != len(blocks) or len(a) != len(blocks):
            raise InvalidArgument("one objective and one constraint stack per block required")
        for n, cb, ab in zip(blocks, c, a):
            if cb.shape != (n, n):
                raise InvalidArgument(f"objective block has shape {cb.shape}, expected {(n, n)}")
            if np.max(np.abs(cb - cb.T), initial=0.0) > 1e-12 or np.max(np.abs(ab - ab.transpose(0, 2, 1)), initial=0.0) > 1e-12:
                raise InvalidArgument("SDP data matrices must be symmetric")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", tuple((x + x.T) / 2 for x in c))
        object.__setattr__(self, "a", tuple((x + x.transpose(0, 2, 1)) / 2 for x in a))

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def apply(self, x: Sequence[np.ndarray]) -> np.ndarray:
        """A(X) = (<A_k, X>)_k."""
        out = np.zeros(self.m)
        for ab, xb in zip(self.a, x):
            out += np.einsum("kij,ij->k", ab, xb)
        return out

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        """A^T(y) = sum_k y_k A_k, per block."""
        return [np.einsum("k,kij->ij", y, ab) for ab in self.a]

    def objective(self, x: Sequence[np.ndarray]) -> float:
        return float(sum(np.sum(cb * xb) for cb, xb in zip(self.c, x)))

    def constraint_matrix(self) -> np.ndarray:
        """Rows are the constraints flattened over all blocks (Frobenius inner product)."""
        return np.hstack([ab.reshape(self.m, -1) for ab in self.a])

    def select(self, rows: Sequence[int]) -> "SdpProblem":
        rows = list(rows)
        return SdpProblem(self.blocks, self.c, tuple(ab[rows] for ab in self.a), self.b[rows])


@dataclass(frozen=True)
class SolverOptions:
    feastol: float = 1e-8
    gaptol: float = 1e-7
    max_iter: int = 200
    step_fraction: float = 0.99
    presolve_tol: float = 1e-10
    # a stalled run whose best iterate still meets these is reported near-optimal
    near_feastol: float = 1e-8
    near_gaptol: float = 1e-7


@dataclass(eq=False)
class SdpSolution:
    status: str
    primal: list[np.ndarray]
    y: np.ndarray
    dual_slack: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    duality_gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    certificate: np.ndarray | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def acceptable(self) -> bool:
        """Optimal, or stalled at an iterate meeting the near-optimal tolerances."""
        return self.status in (OPTIMAL, NEAR_OPTIMAL)


@dataclass(eq=False)
class PresolveResult:
    problem: SdpProblem
    kept: np.ndarray
    certificate: np.ndarray | None


def presolve(problem: SdpProblem, tol: float = 1e-10) -> PresolveResult:
    """Drop linearly dependent constraints (pivoted QR, threshold ``tol``).

    If a dropped row's right-hand side disagrees with the combination of
    kept rows, the system A(X) = b is inconsistent and ``certificate`` holds
    a y with A^T y = 0 and b'y = 1.
    """
    mat = problem.constraint_matrix()
    m = problem.m
    if m == 0:
        return PresolveResult(problem, np.arange(0), None)
    norms = np.linalg.norm(mat, axis=1)
    # rows at rounding level would turn into arbitrary directions once normalized
    live = np.flatnonzero(norms > tol * max(float(np.max(norms)), 1e-300))
    kept = np.arange(0)
    if live.size:
        _, r, piv = sla.qr((mat[live] / norms[live, None]).T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > tol * max(1.0, diag[0])))
        kept = np.sort(live[piv[:rank]])
    dropped = np.setdiff1d(np.arange(m), kept)
    certificate = None
    if dropped.size:
        if kept.size:
            coef, *_ = np.linalg.lstsq(mat[kept].T, mat[dropped].T, rcond=None)
        else:
            coef = np.zeros((0, dropped.size))
        mismatch = problem.b[dropped] - coef.T @ problem.b[kept]
        worst = int(np.argmax(np.abs(mismatch)))
        bscale = max(1.0, float(np.max(np.abs(problem.b))))
        if abs(mismatch[worst]) > 1e-8 * bscale:
            y = np.zeros(m)
            y[dropped[worst]] = 1.0
            y[kept] = -coef[:, worst]
            certificate = y / (problem.b @ y)
    return PresolveResult(problem.select(kept), kept, certificate)


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def _max_step(lam: np.ndarray, d: np.ndarray) -> float:
    # largest alpha with diag(lam) + alpha d >= 0
    s = 1 / np.sqrt(lam)
    t = np.linalg.eigvalsh(_sym(s[:, None] * d * s[None, :]))[0]
    return np.inf if t >= 0 else -1.0 / t


class _HsdState:
    """Iterate of the homogeneous self-dual embedding, kept in NT-scaled form.

    For each block, ``r`` satisfies r^{-1} X r^{-T} = diag(lam) = r^T S r.
    """

    def __init__(self, problem: SdpProblem):
        self.y = np.zeros(problem.m)
        self.tau = 1.0
        self.kappa = 1.0
        self.r = [np.eye(n) for n in problem.blocks]
        self.rinv = [np.eye(n) for n in problem.blocks]
        self.lam = [np.ones(n) for n in problem.blocks]

    def x(self) -> list[np.ndarray]:
        return [_sym((r * lam) @ r.T) for r, lam in zip(self.r, self.lam)]

    def s(self) -> list[np.ndarray]:
        return [_sym((ri.T * lam) @ ri) for ri, lam in zip(self.rinv, self.lam)]

    def update(self, alpha, dy, dtau, dkappa, dx_scaled, ds_scaled):
        self.y = self.y + alpha * dy
        self.tau += alpha * dtau
        self.kappa += alpha * dkappa
        for p, (lam, dx, ds) in enumerate(zip(self.lam, dx_scaled, ds_scaled)):
            l1 = np.linalg.cholesky(_sym(np.diag(lam) + alpha * dx))
            l2 = np.linalg.cholesky(_sym(np.diag(lam) + alpha * ds))
            u, sv, vt = np.linalg.svd(l2.T @ l1)
            root = np.sqrt(sv)
            self.r[p] = self.r[p] @ l1 @ vt.T / root[None, :]
            self.rinv[p] = (root[:, None] * vt) @ sla.solve_triangular(l1, self.rinv[p], lower=True)
            self.lam[p] = sv


def solve(problem: SdpProblem, options: SolverOptions | None = None) -> SdpSolution:
    """Solve ``problem``; see :class:`SdpSolution` for the returned fields.

    Status is ``"optimal"``, ``"infeasible"`` (primal infeasible, with a
    certificate y such that b'y = 1 and sum y_k A_k <= 0), ``"dual-infeasible"``
    or ``"max-iter"`` (best iterate returned). A run that stalls or hits the
    iteration cap at an iterate within ``near_feastol`` / ``near_gaptol`` is
    reported ``"near-optimal"``; degenerate problems without strictly feasible
    points often end this way. The dual vector is reported against the
    original constraint list, with zeros for rows removed by presolve.
    """
    opts = options or SolverOptions()
    pre = presolve(problem, opts.presolve_tol)
    if pre.certificate is not None:
        zeros = [np.zeros((n, n)) for n in problem.blocks]
        return SdpSolution(INFEASIBLE, zeros, np.zeros(problem.m), zeros, np.nan, np.nan, np.inf,
                           np.inf, np.inf, 0, certificate=pre.certificate)
    sol = _solve_hsd(pre.problem, opts)
    y_full = np.zeros(problem.m)
    y_full[pre.kept] = sol.y
    sol.y = y_full
    if sol.certificate is not None:
        cert = np.zeros(problem.m)
        cert[pre.kept] = sol.certificate
        sol.certificate = cert
    return sol


def _solve_hsd(prob: SdpProblem, opts: SolverOptions) -> SdpSolution:
    blocks = prob.blocks
    n_total = sum(blocks)
    b = prob.b
    c = prob.c
    bnorm = max(1.0, float(np.linalg.norm(b)))
    cnorm = max(1.0, float(np.sqrt(sum(np.sum(cb * cb) for cb in c))))
    st = _HsdState(prob)
    history: list[dict] = []
    best = None
    near = None

    def snapshot(status, it, cert=None):
        x = st.x()
        s = st.s()
        tau = st.tau
        xs, ys, ss = [xb / tau for xb in x], st.y / tau, [sb / tau for sb in s]
        pobj = prob.objective(xs)
        dobj = float(b @ ys)
        pres = float(np.linalg.norm(prob.apply(xs) - b)) / bnorm
        rd = [cb - ab - sb for cb, ab, sb in zip(c, prob.adjoint(ys), ss)]
        dres = float(np.sqrt(sum(np.sum(r * r) for r in rd))) / cnorm
        if status in (INFEASIBLE, DUAL_INFEASIBLE):
            xs, ys, ss = x, st.y, s
        return SdpSolution(status, xs, ys, ss, pobj, dobj, abs(pobj - dobj), pres, dres, it,
                           certificate=cert, history=history)

    for it in range(opts.max_iter + 1):
        x = st.x()
        s = st.s()
        tau, kappa = st.tau, st.kappa
        ax = prob.apply(x)
        aty = prob.adjoint(st.y)
        cx = prob.objective(x)
        by = float(b @ st.y)
        r_p = tau * b - ax
        r_d = [tau * cb - atb - sb for cb, atb, sb in zip(c, aty, s)]
        r_g = by - cx - kappa
        compl = float(sum(np.sum(lam * lam) for lam in st.lam))
        mu = (compl + tau * kappa) / (n_total + 1)

        pcost, dcost = cx / tau, by / tau
        pres = float(np.linalg.norm(r_p)) / tau / bnorm
        dres = float(np.sqrt(sum(np.sum(r * r) for r in r_d))) / tau / cnorm
        gap = abs(pcost - dcost)
        history.append({"iter": it, "mu": mu, "pcost": pcost, "dcost": dcost, "pres": pres,
                        "dres": dres, "tau": tau, "kappa": kappa})
        rel_compl = compl / tau**2 / (1 + abs(pcost))
        score = max(pres, dres, gap / (1 + abs(pcost)), rel_compl)
        meets_near = (pres <= opts.near_feastol and dres <= opts.near_feastol
                      and max(gap / (1 + abs(pcost)), rel_compl) <= opts.near_gaptol)
        if meets_near and (near is None or score < near[0]):
            near = (score, snapshot(NEAR_OPTIMAL, it))
        if best is None or score < best[0]:
            best = (score, it)
            best_snapshot = snapshot(MAX_ITER, it)
        elif it - best[1] >= STALL_ITERATIONS:
            # rounding noise dominates; keep the best iterate
            break

        if (pres <= opts.feastol and dres <= opts.feastol
                and gap <= opts.gaptol * (1 + abs(pcost))
                and compl / tau**2 <= opts.gaptol * (1 + abs(pcost))):
            return snapshot(OPTIMAL, it)
        if by > 0:
            aty_s = [atb + sb for atb, sb in zip(aty, s)]
            if float(np.sqrt(sum(np.sum(r * r) for r in aty_s))) / by <= opts.feastol:
                return snapshot(INFEASIBLE, it, cert=st.y / by)
        if cx < 0 and float(np.linalg.norm(ax)) / -cx <= opts.feastol:
            return snapshot(DUAL_INFEASIBLE, it)
        if it == opts.max_iter:
            break

        # everything below lives in the NT-scaled coordinates R^T (.) R
        a_sc = [np.einsum("ji,kjl,lm->kim", r, ab, r) for r, ab in zip(st.r, prob.a)]
        c_sc = [r.T @ cb @ r for r, cb in zip(st.r, c)]
        rd_sc = [r.T @ rdb @ r for r, rdb in zip(st.r, r_d)]
        amat = np.hstack([ab.reshape(prob.m, -1) for ab in a_sc]).T
        q_fac, schur_r = np.linalg.qr(amat)
        if np.min(np.abs(np.diag(schur_r))) <= 1e-14 * np.max(np.abs(np.diag(schur_r))):
            break

        def flat(xs):
            return np.concatenate([xb.reshape(-1) for xb in xs])

        def inner(xs, ys):
            return float(sum(np.sum(xb * yb) for xb, yb in zip(xs, ys)))

        def apply_sc(xs):
            out = np.zeros(prob.m)
            for ab, xb in zip(a_sc, xs):
                out += np.einsum("kij,ij->k", ab, xb)
            return out

        def r_solve(rhs):
            return sla.solve_triangular(schur_r, rhs)

        def rt_solve(rhs):
            return sla.solve_triangular(schur_r, rhs, trans="T")

        # tau elimination via the QR factors; (g - b)'v - <C,C> formed directly
        # would cancel catastrophically once the scaling is ill-conditioned
        c_vec = flat(c_sc)
        qc = q_fac.T @ c_vec
        c_perp = c_vec - q_fac @ qc
        w_b = rt_solve(b)
        v = r_solve(qc + w_b)
        denom_base = -float(c_perp @ c_perp) - float(w_b @ w_b)

        def newton(rho_p, rho_d, rho_g, delta, rho_tau):
            # scaled system: A dx - b dtau = rho_p; A^T dy + ds - C dtau = rho_d;
            # <C, dx> - b'dy + dkappa = rho_g; dx + ds = delta; kappa dtau + tau dkappa = rho_tau
            rhat = [rdb - db for rdb, db in zip(rho_d, delta)]
            rh_vec = flat(rhat)
            w_p = rt_solve(rho_p)
            u = r_solve(w_p + q_fac.T @ rh_vec)
            num = rho_g + float(c_perp @ rh_vec) - float(qc @ w_p) + float(b @ u) - rho_tau / tau
            dtau = num / (denom_base - kappa / tau)
            dy = u + v * dtau
            dxs = [np.einsum("k,kij->ij", dy, ab) - cb * dtau - rb for ab, cb, rb in zip(a_sc, c_sc, rhat)]
            dss = [db - dxb for db, dxb in zip(delta, dxs)]
            dkappa = (rho_tau - kappa * dtau) / tau
            return dy, dtau, dkappa, dxs, dss

        def direction(eta, rc, r_tau):
            delta = [rcb / ((lam[:, None] + lam[None, :]) / 2) for rcb, lam in zip(rc, st.lam)]
            rho_d = [eta * rdb for rdb in rd_sc]
            dy, dtau, dkappa, dxs, dss = newton(eta * r_p, rho_d, eta * r_g, delta, r_tau)
            for _ in range(REFINE_ROUNDS):
                e_p = eta * r_p - (apply_sc(dxs) - b * dtau)
                e_d = [rdb - (np.einsum("k,kij->ij", dy, ab) + dsb - cb * dtau)
                       for rdb, ab, dsb, cb in zip(rho_d, a_sc, dss, c_sc)]
                e_g = eta * r_g - (inner(c_sc, dxs) - b @ dy + dkappa)
                e_c = [db - dxb - dsb for db, dxb, dsb in zip(delta, dxs, dss)]
                e_t = r_tau - (kappa * dtau + tau * dkappa)
                corr = newton(e_p, e_d, e_g, e_c, e_t)
                dy, dtau, dkappa = dy + corr[0], dtau + corr[1], dkappa + corr[2]
                dxs = [a + b_ for a, b_ in zip(dxs, corr[3])]
                dss = [a + b_ for a, b_ in zip(dss, corr[4])]
            return dy, dtau, dkappa, [_sym(d) for d in dxs], [_sym(d) for d in dss]

        def step_length(dtau, dkappa, dxs, dss):
            alpha = np.inf
            for lam, dx, ds in zip(st.lam, dxs, dss):
                alpha = min(alpha, _max_step(lam, dx), _max_step(lam, ds))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        # predictor
        rc = [-np.diag(lam * lam) for lam in st.lam]
        dy_a, dtau_a, dkappa_a, dx_a, ds_a = direction(1.0, rc, -tau * kappa)
        alpha_a = min(1.0, step_length(dtau_a, dkappa_a, dx_a, ds_a))
        sigma = (1 - alpha_a) ** 3

        # corrector
        rc = []
        for lam, dx, ds in zip(st.lam, dx_a, ds_a):
            prod = (dx @ ds + ds @ dx) / 2
            rc.append(sigma * mu * np.eye(len(lam)) - np.diag(lam * lam) - prod)
        r_tau = sigma * mu - tau * kappa - dtau_a * dkappa_a
        dy, dtau, dkappa, dxs, dss = direction(1.0 - sigma, rc, r_tau)
        alpha = min(1.0, opts.step_fraction * step_length(dtau, dkappa, dxs, dss))
        try:
            st.update(alpha, dy, dtau, dkappa, dxs, dss)
        except np.linalg.LinAlgError:
            break

    return best_snapshot if near is None else near[1]


def hermitian_to_real(h) -> np.ndarray:
    """Real symmetric embedding [[Re h, -Im h], [Im h, Re h]]."""
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def real_to_hermitian(x) -> np.ndarray:
    """Inverse of :func:`hermitian_to_real`, averaging over the complex structure.

    Works for any real symmetric ``2n x 2n`` matrix and maps PSD matrices
    to PSD matrices.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0] // 2
    a, bb = x[:n, :n], x[:n, n:]
    cc, d = x[n:, :n], x[n:, n:]
    h = (a + d) / 2 + 1j * (cc - bb) / 2
    return (h + h.conj().T) / 2


def write_problem_text(problem: SdpProblem, path) -> None:
    """Plain-text dump: header lines, then row-major matrices (C blocks, then each A_k with b_k)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"blocks {' '.join(str(n) for n in problem.blocks)}\n")
        fh.write(f"constraints {problem.m}\n")
        for p, n in enumerate(problem.blocks):
            fh.write(f"C {p}\n")
            for row in problem.c[p]:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for k in range(problem.m):
            fh.write(f"A {k} b {float(problem.b[k])!r}\n")
            for p in range(len(problem.blocks)):
                for row in problem.a[p][k]:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_problem_text(path) -> SdpProblem:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or lines[0][0] != "blocks" or lines[1][0] != "constraints":
        raise InvalidArgument(f"{path}: not an SDP text dump")
    blocks = [int(t) for t in lines[0][1:]]
    m = int(lines[1][1])
    pos = 2

    def read_matrix(n):
        nonlocal pos
        mat = np.array([[float(t) for t in lines[pos + i]] for i in range(n)])
        pos += n
        return mat

    c = []
    for n in blocks:
        pos += 1
        c.append(read_matrix(n))
    a = [np.zeros((m, n, n)) for n in blocks]
    b = np.zeros(m)
    for k in range(m):
        b[k] = float(lines[pos][3])
        pos += 1
        for p, n in enumerate(blocks):
            a[p][k] = read_matrix(n)
    return SdpProblem(tuple(blocks), tuple(c), tuple(a), b)


hermitian_to_real_embedding = hermitian_to_real
