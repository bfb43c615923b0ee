"""Primal-dual interior-point solver for small dense block-PSD programs.

Standard form, over symmetric blocks X = (X_1, ..., X_B):

    minimize    sum_b <C_b, X_b>
    subject to  sum_b <A_ib, X_b> = b_i   (i = 1..m),   X_b >= 0.

The iteration runs on the homogeneous self-dual embedding with the HKM
search direction and a Mehrotra predictor-corrector, so infeasible problems
terminate with an explicit Farkas certificate instead of a diverging
iterate.  The Schur complement is formed and factored densely; constraint
sparsity is deliberately not exploited (desk-scale problems only).

Complex Hermitian data enters through the real embedding
``[[Re H, -Im H], [Im H, Re H]]``; note Hilbert-Schmidt inner products
double under the embedding, so right-hand sides and objective values carry
a factor of 2 that callers must account for (see :func:`embed_complex`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .operators import HermitianOperator

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "SolverBreakdown",
    "embed_complex",
    "unembed_real",
    "hermitian_basis",
    "solve",
]


class SolverBreakdown(RuntimeError):
    """Numerical failure distinct from plain iteration-limit exhaustion."""


@dataclass
class SdpProblem:
    """Block-diagonal standard-form SDP.

    ``objective[b]`` is the symmetric cost matrix for block b (None = zero).
    Each constraint is ``(mats, rhs)`` where ``mats[b]`` is the symmetric
    coefficient matrix on block b (None = zero).  ``sense`` is one of
    "minimize", "maximize", "feasibility".
    """

    block_sizes: list[int]
    objective: list
    constraints: list
    sense: str = "minimize"

    def validate(self, sym_tol: float = 1e-12):
        if self.sense not in ("minimize", "maximize", "feasibility"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if len(self.objective) != len(self.block_sizes):
            raise ValueError("objective must supply one matrix (or None) per block")
        for b, n in enumerate(self.block_sizes):
            pairs = [("objective", self.objective[b])]
            pairs += [
                (f"constraint {i}", mats[b])
                for i, (mats, _) in enumerate(self.constraints)
            ]
            for tag, mat in pairs:
                if mat is None:
                    continue
                if mat.shape != (n, n):
                    raise ValueError(f"{tag}: block {b} shape {mat.shape} != {(n, n)}")
                scale = max(1.0, float(np.max(np.abs(mat))))
                if np.max(np.abs(mat - mat.T)) > sym_tol * scale:
                    raise ValueError(f"{tag}: block {b} not symmetric")


@dataclass
class SdpSolution:
    status: str  # optimal | primal_infeasible | dual_infeasible | max_iter
    primal_blocks: list
    dual_multipliers: np.ndarray
    objective_value: float
    residuals: tuple  # (primal, dual, gap)
    certificate: list | None = None
    iterations: int = 0
    dual_slacks: list = field(default_factory=list)


def embed_complex(h) -> np.ndarray:
    """Real symmetric embedding of a Hermitian matrix.

    Spectrum is preserved with doubled multiplicities, so PSD-ness carries
    over both ways.  <E(A), E(B)> = 2 <A, B> for Hermitian A, B.
    """
    m = h.entries if isinstance(h, HermitianOperator) else np.asarray(h)
    re, im = np.real(m), np.imag(m)
    return np.block([[re, -im], [im, re]])


def unembed_real(r: np.ndarray) -> np.ndarray:
    """Map a real 2n x 2n block back to an n x n Hermitian matrix."""
    n = r.shape[0] // 2
    re = 0.5 * (r[:n, :n] + r[n:, n:])
    im = 0.5 * (r[n:, :n] - r[:n, n:])
    h = re + 1j * im
    return 0.5 * (h + h.conj().T)


def hermitian_basis(n: int):
    """Orthonormal Hermitian basis of C^{n x n} (n^2 elements)."""
    basis = []
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = s
            e[j, i] = s
            basis.append(e)
            f = np.zeros((n, n), dtype=complex)
            f[i, j] = -1j * s
            f[j, i] = 1j * s
            basis.append(f)
    return basis


# ---------------------------------------------------------------------------
# internal dense representation
# ---------------------------------------------------------------------------


class _Blocks:
    """Stacked constraint tensors plus the maps y -> A^T(y) and X -> A(X)."""

    def __init__(self, block_sizes, constraints):
        self.sizes = list(block_sizes)
        self.m = len(constraints)
        self.stacks = []
        self.flats = []
        for b, n in enumerate(self.sizes):
            stack = np.zeros((self.m, n, n))
            for i, (mats, _) in enumerate(constraints):
                if mats[b] is not None:
                    stack[i] = 0.5 * (mats[b] + mats[b].T)
            self.stacks.append(stack)
            self.flats.append(stack.reshape(self.m, n * n))
        self.rhs = np.array([float(r) for _, r in constraints])

    def apply(self, xblocks) -> np.ndarray:
        out = np.zeros(self.m)
        for flat, x in zip(self.flats, xblocks):
            out += flat @ x.ravel()
        return out

    def adjoint(self, y) -> list:
        return [np.tensordot(y, stack, axes=1) for stack in self.stacks]


def _prune_constraints(blocks: _Blocks, rel_tol: float = 1e-12):
    """Drop linearly dependent constraint rows via the constraint Gram matrix.

    Returns ``(kept_indices, farkas_y)``; ``farkas_y`` is a certificate for a
    dependent row whose right-hand side is inconsistent (None otherwise).
    The Gram route squares conditioning, so the effective detection floor is
    machine precision on the singular values; exactly-duplicated or
    near-machine-dependent rows are what occurs in practice here.
    """
    m = blocks.m
    if m == 0:
        return [], None
    gram = np.zeros((m, m))
    for flat in blocks.flats:
        gram += flat @ flat.T
    w, v = np.linalg.eigh(gram)
    wmax = max(float(w[-1]), 1e-300)
    null_mask = w < rel_tol * wmax
    rhs_scale = 1.0 + float(np.max(np.abs(blocks.rhs), initial=0.0))
    for k in np.nonzero(null_mask)[0]:
        u = v[:, k]
        viol = float(u @ blocks.rhs)
        if abs(viol) > 1e-9 * rhs_scale:
            return None, u / viol
    if not null_mask.any():
        return list(range(m)), None
    # greedy pivoted Cholesky on the Gram picks an independent subset
    kept = []
    resid = gram.copy()
    thresh = rel_tol * wmax
    for _ in range(m):
        diag = np.diag(resid).copy()
        if kept:
            diag[kept] = -np.inf
        j = int(np.argmax(diag))
        if diag[j] <= thresh:
            break
        kept.append(j)
        col = resid[:, j] / resid[j, j]
        resid = resid - np.outer(col, resid[j, :])
    kept.sort()
    return kept, None


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx >= 0 for PD x (inf if unconstrained)."""
    try:
        ell = np.linalg.cholesky(x)
        half = sla.solve_triangular(ell, dx, lower=True, check_finite=False)
        mid = sla.solve_triangular(ell, half.T, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(x)
        w = np.maximum(w, 1e-14 * max(float(w[-1]), 1.0))
        root_inv = v / np.sqrt(w)
        mid = root_inv.T @ dx @ root_inv
    mid = 0.5 * (mid + mid.T)
    lam = float(np.linalg.eigvalsh(mid)[0])
    if lam >= 0.0:
        return np.inf
    return -1.0 / lam


def solve(
    problem: SdpProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    log_csv=None,
) -> SdpSolution:
    """Solve a block SDP; see the module docstring for the algorithm.

    ``log_csv`` may be a writable text stream; each iteration appends an
    ``iter,mu,primal_res,dual_res,gap`` row.
    """
    problem.validate()
    nb = len(problem.block_sizes)
    sign = -1.0 if problem.sense == "maximize" else 1.0
    cost = []
    for b, n in enumerate(problem.block_sizes):
        c = problem.objective[b]
        if problem.sense == "feasibility" or c is None:
            cost.append(np.zeros((n, n)))
        else:
            cost.append(sign * 0.5 * (c + c.T))

    blocks = _Blocks(problem.block_sizes, problem.constraints)
    kept, farkas = _prune_constraints(blocks)
    if farkas is not None:
        return SdpSolution(
            status="primal_infeasible",
            primal_blocks=[np.zeros((n, n)) for n in problem.block_sizes],
            dual_multipliers=farkas,
            objective_value=np.nan,
            residuals=(np.inf, np.inf, np.inf),
            certificate=[-mb for mb in blocks.adjoint(farkas)],
            iterations=0,
        )
    if len(kept) < blocks.m:
        blocks = _Blocks(
            problem.block_sizes, [problem.constraints[i] for i in kept]
        )
        kept_index = np.array(kept, dtype=int)
    else:
        kept_index = np.arange(blocks.m)

    m = blocks.m
    bvec = blocks.rhs
    bnorm = 1.0 + np.linalg.norm(bvec)
    cnorm = 1.0 + np.sqrt(sum(float(np.sum(c * c)) for c in cost))
    deg = sum(problem.block_sizes) + 1

    def inner(ablocks, bblocks):
        return sum(float(np.sum(a * b)) for a, b in zip(ablocks, bblocks))

    def expand_y(yk):
        full = np.zeros(len(problem.constraints))
        full[kept_index] = yk
        return full

    X = [np.eye(n) for n in problem.block_sizes]
    Z = [np.eye(n) for n in problem.block_sizes]
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    step_frac = 0.98
    status = "max_iter"
    it = 0
    pres = dres = gap = np.inf
    best = None

    for it in range(1, max_iter + 1):
        mu = (inner(X, Z) + tau * kappa) / deg
        AX = blocks.apply(X)
        ATy = blocks.adjoint(y)
        rp = bvec * tau - AX
        rd = [cost[b] * tau - ATy[b] - Z[b] for b in range(nb)]
        rg = float(bvec @ y) - inner(cost, X) - kappa

        pres = np.linalg.norm(AX / tau - bvec) / bnorm
        dres = (
            np.sqrt(
                sum(
                    float(np.sum((ATy[b] / tau + Z[b] / tau - cost[b]) ** 2))
                    for b in range(nb)
                )
            )
            / cnorm
        )
        pobj = inner(cost, X) / tau
        dobj = float(bvec @ y) / tau
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

        if log_csv is not None:
            log_csv.write(f"{it},{mu:.6e},{pres:.6e},{dres:.6e},{gap:.6e}\n")

        if max(pres, dres, gap) <= tol:
            status = "optimal"
            break

        # infeasibility certificates straight off the homogeneous iterate
        by = float(bvec @ y)
        if by > tol:
            yn = y / by
            viol = max(
                float(np.linalg.eigvalsh(cb)[-1]) for cb in blocks.adjoint(yn)
            )
            if viol <= tol * (1.0 + np.linalg.norm(yn)):
                status = "primal_infeasible"
                break
        cx = inner(cost, X)
        if cx < -tol:
            xn = [xb / (-cx) for xb in X]
            if np.linalg.norm(blocks.apply(xn)) <= tol * (
                1.0 + max(np.linalg.norm(x) for x in xn)
            ):
                status = "dual_infeasible"
                break

        best = (X, y, Z, tau, pres, dres, gap)

        Zinv = []
        for zb in Z:
            try:
                ell = np.linalg.cholesky(zb)
            except np.linalg.LinAlgError as exc:
                raise SolverBreakdown(f"Z block lost definiteness: {exc}") from exc
            inv_ell = sla.solve_triangular(
                ell, np.eye(zb.shape[0]), lower=True, check_finite=False
            )
            Zinv.append(inv_ell.T @ inv_ell)

        # HKM Schur complement M_ij = <A_i, Zinv A_j X>, then symmetrized
        M = np.zeros((m, m))
        for b in range(nb):
            half = np.matmul(Zinv[b], np.matmul(blocks.stacks[b], X[b]))
            M += blocks.flats[b] @ half.reshape(m, -1).T
        M = 0.5 * (M + M.T)
        factor = None
        jitter = 0.0
        for attempt in range(4):
            try:
                factor = sla.cho_factor(
                    M + jitter * np.eye(m), lower=True, check_finite=False
                )
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-13 * max(np.trace(M) / max(m, 1), 1.0))
        if factor is None:
            raise SolverBreakdown("Schur complement factorization failed")

        def schur_solve(rhs):
            sol = sla.cho_solve(factor, rhs, check_finite=False)
            resid = rhs - M @ sol  # one refinement step recovers ~2 digits
            return sol + sla.cho_solve(factor, resid, check_finite=False)

        r2 = bvec + blocks.apply([Zinv[b] @ cost[b] @ X[b] for b in range(nb)])
        dy2 = schur_solve(r2)
        ATdy2 = blocks.adjoint(dy2)
        dZ2 = [cost[b] - ATdy2[b] for b in range(nb)]
        dX2 = [Zinv[b] @ (ATdy2[b] - cost[b]) @ X[b] for b in range(nb)]

        def build(sigma_mu, corr, corr_tk):
            base = []
            for b in range(nb):
                t = sigma_mu * Zinv[b] - X[b] - Zinv[b] @ rd[b] @ X[b]
                if corr[b] is not None:
                    t = t - Zinv[b] @ corr[b]
                base.append(t)
            r1 = rp - blocks.apply(base)
            dy1 = schur_solve(r1)
            ATdy1 = blocks.adjoint(dy1)
            dX1 = [base[b] + Zinv[b] @ ATdy1[b] @ X[b] for b in range(nb)]
            dZ1 = [rd[b] - ATdy1[b] for b in range(nb)]
            denom = float(bvec @ dy2) - inner(cost, dX2) + kappa / tau
            if abs(denom) < 1e-300:
                raise SolverBreakdown("degenerate tau equation")
            numer = (
                (sigma_mu - tau * kappa - corr_tk) / tau
                - rg
                - float(bvec @ dy1)
                + inner(cost, dX1)
            )
            dtau = numer / denom
            dX = [0.5 * ((dX1[b] + dtau * dX2[b]) + (dX1[b] + dtau * dX2[b]).T) for b in range(nb)]
            dZ = [dZ1[b] + dtau * dZ2[b] for b in range(nb)]
            dkappa = (sigma_mu - tau * kappa - corr_tk) / tau - (kappa / tau) * dtau
            return dX, dy1 + dtau * dy2, dZ, dtau, dkappa

        def max_alpha(dX, dZ, dtau, dkappa):
            alpha = np.inf
            for b in range(nb):
                alpha = min(alpha, _max_step(X[b], dX[b]))
                alpha = min(alpha, _max_step(Z[b], dZ[b]))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        dXa, dya, dZa, dtaua, dkappaa = build(0.0, [None] * nb, 0.0)
        alpha_a = min(1.0, max_alpha(dXa, dZa, dtaua, dkappaa))
        mu_aff = (
            inner(
                [X[b] + alpha_a * dXa[b] for b in range(nb)],
                [Z[b] + alpha_a * dZa[b] for b in range(nb)],
            )
            + (tau + alpha_a * dtaua) * (kappa + alpha_a * dkappaa)
        ) / deg
        sigma = min(max((max(mu_aff, 0.0) / mu) ** 3, 1e-8), 1.0 - 1e-8)

        corr = [dZa[b] @ dXa[b] for b in range(nb)]
        dX, dy, dZ, dtau, dkappa = build(sigma * mu, corr, dtaua * dkappaa)
        alpha = min(1.0, step_frac * max_alpha(dX, dZ, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 1e-12:
            break

        # back off if rounding in the max-step estimate overshot the cone
        for _ in range(40):
            ok = all(
                np.linalg.eigvalsh(X[b] + alpha * dX[b])[0] > 0.0
                and np.linalg.eigvalsh(Z[b] + alpha * dZ[b])[0] > 0.0
                for b in range(nb)
            )
            if ok and tau + alpha * dtau > 0.0 and kappa + alpha * dkappa > 0.0:
                break
            alpha *= 0.8
        X = [X[b] + alpha * dX[b] for b in range(nb)]
        Z = [Z[b] + alpha * dZ[b] for b in range(nb)]
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa
        if not np.isfinite(tau) or tau <= 0.0 or kappa < 0.0:
            raise SolverBreakdown("homogeneous variables left the cone")

    if status == "optimal":
        return SdpSolution(
            status="optimal",
            primal_blocks=[0.5 * (xb + xb.T) / tau for xb in X],
            dual_multipliers=expand_y(y / tau),
            objective_value=sign * inner(cost, X) / tau,
            residuals=(pres, dres, gap),
            iterations=it,
            dual_slacks=[zb / tau for zb in Z],
        )
    if status == "primal_infeasible":
        by = float(bvec @ y)
        return SdpSolution(
            status="primal_infeasible",
            primal_blocks=[np.zeros((n, n)) for n in problem.block_sizes],
            dual_multipliers=expand_y(y / by),
            objective_value=np.nan,
            residuals=(pres, dres, gap),
            certificate=[zb / by for zb in Z],
            iterations=it,
        )
    if status == "dual_infeasible":
        cx = inner(cost, X)
        ray = [xb / (-cx) for xb in X]
        return SdpSolution(
            status="dual_infeasible",
            primal_blocks=ray,
            dual_multipliers=expand_y(y),
            objective_value=-np.inf if sign > 0 else np.inf,
            residuals=(pres, dres, gap),
            certificate=ray,
            iterations=it,
        )
    if best is None:
        raise SolverBreakdown("no usable iterate produced")
    Xb, yb, Zb, taub, pres, dres, gap = best
    return SdpSolution(
        status="max_iter",
        primal_blocks=[0.5 * (xb + xb.T) / taub for xb in Xb],
        dual_multipliers=expand_y(yb / taub),
        objective_value=sign * inner(cost, Xb) / taub,
        residuals=(pres, dres, gap),
        iterations=it,
        dual_slacks=[zb / taub for zb in Zb],
    )
