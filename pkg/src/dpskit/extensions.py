"""Compile (PPT) Bose-symmetric-extension queries into block SDPs.

The decision variable is always the *compressed* extension X living on
H_A (x) Sym^N(H_B); the two linear maps that connect it to physics are

* ``trace_map``  : X  ->  tr over N-1 copies of the lifted extension,
* ``ppt_map``    : X  ->  compression of the lifted extension, partially
                   transposed over the last N2 copies, onto
                   H_A (x) Sym^{N1} (x) Sym^{N2},  N1 = ceil(N/2).

Both maps have exact rational-combinatorial coefficients derived from the
occupation-number calculus; the naive lift/operate/compress pipeline is
kept in the test suite as an oracle only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .operators import HermitianOperator
from .solver import (
    SdpProblem,
    SdpSolution,
    SolverBreakdown,
    embed_complex,
    hermitian_basis,
    solve,
    unembed_real,
)
from .symmetric import SymmetricBasis, build_basis, occupations, sym_dim

__all__ = [
    "BudgetExceeded",
    "ExtensionQuery",
    "MembershipResult",
    "TraceMap",
    "PptMap",
    "compressed_maps",
    "build_bse_sdp",
    "check_membership",
    "optimize_over_cone",
    "optimize_over_cone_full",
    "ConeOptimum",
    "verify_witness",
    "reduce_extension",
    "build_tripartite_sdp",
    "tripartite_membership",
]

BUDGET_ENV = "DPSKIT_BUDGET_DIM"
DEFAULT_BUDGET_DIM = 192


class BudgetExceeded(RuntimeError):
    """The compressed SDP would exceed the configured dimension budget."""


def _budget() -> int:
    raw = os.environ.get(BUDGET_ENV, "")
    try:
        return int(raw) if raw else DEFAULT_BUDGET_DIM
    except ValueError:
        return DEFAULT_BUDGET_DIM


@dataclass(frozen=True)
class ExtensionQuery:
    """A membership or cone-optimization request against S^N or S_p^N.

    ``reduced_constraint`` picks the linear condition on the reduced
    operator: "trace_match" (membership), "identity_marginal" (Lambda_A = I,
    the state-estimation normalization) or "unit_trace" (optimization over
    normalized cone members).  ``ppt_cuts`` is "half" for the single
    ceil(N/2) | floor(N/2) bipartition that defines S_p^N, or "all" for
    every nontrivial cut (an optional strengthening, not the default).
    """

    rho: HermitianOperator
    N: int
    ppt: bool = False
    mode: str = "membership"
    objective: HermitianOperator | None = None
    reduced_constraint: str = "trace_match"
    ppt_cuts: str = "half"

    def __post_init__(self):
        if self.rho.nfactors != 2:
            raise ValueError("query state must have exactly two factors (A, B)")
        if self.N < 1:
            raise ValueError("extension size N must be >= 1")
        if self.mode not in ("membership", "cone_optimize"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "membership" and self.reduced_constraint != "trace_match":
            raise ValueError("membership queries use the trace_match constraint")
        if self.mode == "cone_optimize":
            if self.objective is None:
                raise ValueError("cone_optimize requires an objective operator")
            if self.reduced_constraint not in ("identity_marginal", "unit_trace"):
                raise ValueError(
                    "cone_optimize uses identity_marginal or unit_trace"
                )
        if self.ppt_cuts not in ("half", "all"):
            raise ValueError(f"unknown ppt_cuts {self.ppt_cuts!r}")


@dataclass
class MembershipResult:
    verdict: str  # feasible | infeasible | undecided
    extension: np.ndarray | None = None  # compressed, on H_A (x) Sym^N
    witness: HermitianOperator | None = None
    detail: str = ""


class TraceMap:
    """X on H_A (x) Sym^N  ->  tr_{B^{N-1}} of the lifted operator."""

    def __init__(self, dA: int, basis: SymmetricBasis):
        self.dA = dA
        self.d = basis.d
        self.N = basis.N
        self.size_in = basis.size
        occs = basis.multi_indices
        index = {occ: i for i, occ in enumerate(occs)}
        rows = []
        for ki, k in enumerate(occs):
            for b in range(self.d):
                if k[b] == 0:
                    continue
                reduced = list(k)
                reduced[b] -= 1
                for bp in range(self.d):
                    kp = list(reduced)
                    kp[bp] += 1
                    kpi = index[tuple(kp)]
                    coef = sqrt(k[b] * kp[bp]) / self.N
                    rows.append((ki, kpi, b, bp, coef))
        self.rows = rows

    def apply(self, x: np.ndarray) -> np.ndarray:
        dA, d, s = self.dA, self.d, self.size_in
        x4 = x.reshape(dA, s, dA, s)
        out = np.zeros((dA, d, dA, d), dtype=complex)
        for ki, kpi, b, bp, coef in self.rows:
            out[:, b, :, bp] += coef * x4[:, ki, :, kpi]
        return out.reshape(dA * d, dA * d)

    def adjoint(self, e: np.ndarray) -> np.ndarray:
        dA, d, s = self.dA, self.d, self.size_in
        e4 = e.reshape(dA, d, dA, d)
        out = np.zeros((dA, s, dA, s), dtype=complex)
        for ki, kpi, b, bp, coef in self.rows:
            out[:, ki, :, kpi] += coef * e4[:, b, :, bp]
        return out.reshape(dA * s, dA * s)


class PptMap:
    """X -> compressed partial transpose across A B^{N-K} | B^K (K factors)."""

    def __init__(self, dA: int, basis: SymmetricBasis, transposed: int):
        if not 0 <= transposed <= basis.N:
            raise ValueError("transposed copy count out of range")
        self.dA = dA
        self.d = basis.d
        self.N = basis.N
        self.n2 = transposed
        self.n1 = basis.N - transposed
        self.size_in = basis.size
        occs1 = occupations(basis.d, self.n1)
        occs2 = occupations(basis.d, self.n2)
        self.s1, self.s2 = len(occs1), len(occs2)
        index = {occ: i for i, occ in enumerate(basis.multi_indices)}
        split_norm = comb(self.N, self.n1)
        coef = {}
        for ui, u in enumerate(occs1):
            for vi, v in enumerate(occs2):
                prod_binom = 1
                for a, b in zip(u, v):
                    prod_binom *= comb(a + b, a)
                coef[ui, vi] = sqrt(prod_binom / split_norm)
        rows = []
        for ui, u in enumerate(occs1):
            for vi, v in enumerate(occs2):
                for upi, up in enumerate(occs1):
                    for vpi, vp in enumerate(occs2):
                        k = tuple(a + b for a, b in zip(u, vp))
                        kp = tuple(a + b for a, b in zip(up, v))
                        rows.append(
                            (
                                ui * self.s2 + vi,
                                upi * self.s2 + vpi,
                                index[k],
                                index[kp],
                                coef[ui, vpi] * coef[upi, vi],
                            )
                        )
        self.rows = rows
        self.size_out = self.s1 * self.s2

    def apply(self, x: np.ndarray) -> np.ndarray:
        dA, s, so = self.dA, self.size_in, self.size_out
        x4 = x.reshape(dA, s, dA, s)
        out = np.zeros((dA, so, dA, so), dtype=complex)
        for oi, oj, ki, kpi, coef in self.rows:
            out[:, oi, :, oj] = coef * x4[:, ki, :, kpi]
        return out.reshape(dA * so, dA * so)

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        dA, s, so = self.dA, self.size_in, self.size_out
        g4 = g.reshape(dA, so, dA, so)
        out = np.zeros((dA, s, dA, s), dtype=complex)
        for oi, oj, ki, kpi, coef in self.rows:
            out[:, ki, :, kpi] += coef * g4[:, oi, :, oj]
        return out.reshape(dA * s, dA * s)


def compressed_maps(dA: int, basis: SymmetricBasis, ppt: bool):
    """The (trace_map, ppt_map) pair for the standard ceil/floor cut."""
    tmap = TraceMap(dA, basis)
    pmap = PptMap(dA, basis, basis.N // 2) if ppt else None
    return tmap, pmap


# ---------------------------------------------------------------------------
# SDP compilation
# ---------------------------------------------------------------------------


@dataclass
class _Codec:
    query: ExtensionQuery
    basis: SymmetricBasis
    tmap: TraceMap
    pmaps: list
    n_reduced_constraints: int
    herm_ab: list


def _compile(q: ExtensionQuery) -> tuple[SdpProblem, _Codec]:
    dA, dB = q.rho.factor_dims
    if dA * sym_dim(dB, q.N) > _budget():
        raise BudgetExceeded(
            f"d_A*sym_dim(d_B,N) = {dA * sym_dim(dB, q.N)} exceeds "
            f"{BUDGET_ENV} = {_budget()}"
        )
    basis = build_basis(dB, q.N)
    tmap = TraceMap(dA, basis)
    if q.ppt:
        cuts = (
            [basis.N // 2]
            if q.ppt_cuts == "half"
            else list(range(1, basis.N // 2 + 1))
        )
        pmaps = [PptMap(dA, basis, t) for t in cuts]
        # N=1 has an empty transposed side; the PPT block is then X itself
        pmaps = [p for p in pmaps if p.n2 > 0]
    else:
        pmaps = []

    nx = dA * basis.size
    block_sizes = [2 * nx] + [2 * dA * p.size_out for p in pmaps]
    nb = len(block_sizes)

    constraints = []
    herm_ab = []
    if q.reduced_constraint == "trace_match":
        herm_ab = hermitian_basis(dA * dB)
        target = q.rho.entries
        for e in herm_ab:
            mats = [None] * nb
            mats[0] = embed_complex(tmap.adjoint(e))
            rhs = 2.0 * float(np.real(np.sum(e.conj() * target)))
            constraints.append((mats, rhs))
    elif q.reduced_constraint == "identity_marginal":
        # <F (x) I_B, Lambda> = tr F  for an orthonormal Hermitian basis of A
        eye_b = np.eye(dB)
        for f in hermitian_basis(dA):
            mats = [None] * nb
            mats[0] = embed_complex(tmap.adjoint(np.kron(f, eye_b)))
            constraints.append((mats, 2.0 * float(np.real(np.trace(f)))))
    elif q.reduced_constraint == "unit_trace":
        mats = [None] * nb
        mats[0] = embed_complex(np.eye(nx, dtype=complex))
        constraints.append((mats, 2.0))
    else:
        raise ValueError(q.reduced_constraint)
    n_reduced = len(constraints)

    for pi, pmap in enumerate(pmaps):
        ny = dA * pmap.size_out
        for g in hermitian_basis(ny):
            mats = [None] * nb
            mats[0] = embed_complex(pmap.adjoint(g))
            mats[1 + pi] = -embed_complex(g)
            constraints.append((mats, 0.0))

    objective = [None] * nb
    sense = "feasibility"
    if q.mode == "cone_optimize":
        objective[0] = embed_complex(tmap.adjoint(q.objective.entries))
        sense = "maximize"

    problem = SdpProblem(block_sizes, objective, constraints, sense)
    return problem, _Codec(q, basis, tmap, pmaps, n_reduced, herm_ab)


def build_bse_sdp(q: ExtensionQuery) -> SdpProblem:
    problem, _ = _compile(q)
    return problem


FEAS_EQUALITY_TOL = 1e-7
FEAS_PSD_SLACK = 1e-9


def _extract_extension(sol: SdpSolution, codec: _Codec):
    x = unembed_real(sol.primal_blocks[0])
    return x


def _verify_feasible(x: np.ndarray, codec: _Codec) -> tuple[bool, str]:
    q = codec.query
    eq = float(np.max(np.abs(codec.tmap.apply(x) - q.rho.entries)))
    if eq > FEAS_EQUALITY_TOL:
        return False, f"reduced-state residual {eq:.2e}"
    lam = float(np.linalg.eigvalsh(x)[0])
    if lam < -FEAS_PSD_SLACK * 100:
        return False, f"extension min eigenvalue {lam:.2e}"
    for pmap in codec.pmaps:
        lam_p = float(np.linalg.eigvalsh(pmap.apply(x))[0])
        if lam_p < -FEAS_PSD_SLACK * 100:
            return False, f"PPT block min eigenvalue {lam_p:.2e}"
    return True, f"residual {eq:.2e}"


def _decode_witness(sol: SdpSolution, codec: _Codec) -> HermitianOperator | None:
    y = sol.dual_multipliers
    if codec.n_reduced_constraints == 0 or codec.herm_ab == []:
        return None
    w = np.zeros_like(codec.herm_ab[0])
    for i in range(codec.n_reduced_constraints):
        w += y[i] * codec.herm_ab[i]
    w = -0.5 * (w + w.conj().T)
    scale = float(np.linalg.norm(w))
    if scale == 0.0:
        return None
    dA, dB = codec.query.rho.factor_dims
    return HermitianOperator((dA, dB), w / scale)


def check_membership(
    q: ExtensionQuery, tol: float = 1e-8, max_iter: int = 200,
    refine_witness: bool = False,
) -> MembershipResult:
    """Does rho admit an N (PPT) Bose-symmetric extension?

    Feasible verdicts always ship an explicit compressed extension that has
    been re-verified against the defining conditions; infeasible verdicts
    ship the dual entanglement witness.  States sitting numerically on the
    cone boundary may come back "undecided".
    """
    if q.mode != "membership":
        raise ValueError("check_membership requires a membership-mode query")
    problem, codec = _compile(q)
    try:
        sol = solve(problem, tol=tol, max_iter=max_iter)
    except SolverBreakdown as exc:
        return MembershipResult("undecided", detail=f"solver breakdown: {exc}")
    if sol.status in ("optimal", "max_iter"):
        x = _extract_extension(sol, codec)
        ok, detail = _verify_feasible(x, codec)
        if ok:
            return MembershipResult("feasible", extension=x, detail=detail)
        if sol.status == "max_iter":
            return MembershipResult("undecided", detail=f"max_iter; {detail}")
        return MembershipResult("undecided", detail=detail)
    if sol.status == "primal_infeasible":
        w = _decode_witness(sol, codec)
        if w is None:
            return MembershipResult("undecided", detail="certificate decode failed")
        if refine_witness:
            w = _refine_witness(q, w)
        return MembershipResult("infeasible", witness=w, detail="dual certificate")
    return MembershipResult("undecided", detail=f"solver status {sol.status}")


def _refine_witness(q: ExtensionQuery, w: HermitianOperator) -> HermitianOperator:
    """Shift the witness by c*I when the cone-side sign condition is slightly
    violated by solver roundoff; the margin on tr(W rho) < 0 dwarfs c."""
    floor = verify_witness(q, w)
    if floor >= 0.0:
        return w
    margin = abs(float(np.vdot(w.entries, q.rho.entries).real))
    shift = min(-floor * 1.5, 0.25 * margin)
    dA, dB = w.factor_dims
    return HermitianOperator((dA, dB), w.entries + shift * np.eye(dA * dB))


def verify_witness(q: ExtensionQuery, w: HermitianOperator) -> float:
    """min tr(W sigma) over unit-trace members of the tested cone (aux SDP)."""
    aux = ExtensionQuery(
        rho=q.rho,
        N=q.N,
        ppt=q.ppt,
        mode="cone_optimize",
        objective=HermitianOperator(w.factor_dims, -w.entries),
        reduced_constraint="unit_trace",
        ppt_cuts=q.ppt_cuts,
    )
    value, _ = optimize_over_cone(aux)
    return -value


@dataclass
class ConeOptimum:
    value: float
    optimizer: HermitianOperator
    status: str
    iterations: int
    extension: np.ndarray


def optimize_over_cone_full(
    q: ExtensionQuery, tol: float = 1e-8, max_iter: int = 200
) -> ConeOptimum:
    if q.mode != "cone_optimize":
        raise ValueError("optimize_over_cone requires a cone_optimize query")
    problem, codec = _compile(q)
    sol = solve(problem, tol=tol, max_iter=max_iter)
    if sol.status == "dual_infeasible":
        raise SolverBreakdown("cone optimization is unbounded; check constraints")
    if sol.status == "primal_infeasible":
        raise SolverBreakdown("cone constraints are infeasible")
    x = _extract_extension(sol, codec)
    lam = codec.tmap.apply(x)
    dA, dB = q.rho.factor_dims
    return ConeOptimum(
        value=0.5 * sol.objective_value,
        optimizer=HermitianOperator((dA, dB), lam, hermitian_tol=1e-6),
        status=sol.status,
        iterations=sol.iterations,
        extension=x,
    )


def optimize_over_cone(
    q: ExtensionQuery, tol: float = 1e-8, max_iter: int = 200
) -> tuple[float, HermitianOperator]:
    """max tr(objective . Lambda) over the compressed cone at level N.

    Returns the optimum and the reduced optimizer Lambda_AB (the partial
    trace of the optimal extension).
    """
    opt = optimize_over_cone_full(q, tol=tol, max_iter=max_iter)
    return opt.value, opt.optimizer


def reduce_extension(x: np.ndarray, dA: int, d: int, N: int) -> np.ndarray:
    """Trace one B copy off a compressed extension: Sym^N -> Sym^{N-1}."""
    if N < 2:
        raise ValueError("need N >= 2 to reduce")
    occs_hi = occupations(d, N)
    occs_lo = occupations(d, N - 1)
    hi = {occ: i for i, occ in enumerate(occs_hi)}
    s_hi, s_lo = len(occs_hi), len(occs_lo)
    x4 = x.reshape(dA, s_hi, dA, s_hi)
    out = np.zeros((dA, s_lo, dA, s_lo), dtype=complex)
    for mi, mocc in enumerate(occs_lo):
        for mpi, mpocc in enumerate(occs_lo):
            for b in range(d):
                k = list(mocc)
                k[b] += 1
                kp = list(mpocc)
                kp[b] += 1
                coef = sqrt(k[b] * kp[b]) / N
                out[:, mi, :, mpi] += coef * x4[:, hi[tuple(k)], :, hi[tuple(kp)]]
    return out.reshape(dA * s_lo, dA * s_lo)


# ---------------------------------------------------------------------------
# tripartite locally Bose-symmetric extensions
# ---------------------------------------------------------------------------


class _LocalTables:
    """Per-party trace/ppt tables for the locally symmetric variant."""

    def __init__(self, d: int, N: int):
        self.basis = build_basis(d, N)
        self.tmap = TraceMap(1, self.basis)  # tables only; dA handled outside
        self.pmap = PptMap(1, self.basis, N // 2)


def build_tripartite_sdp(
    rho: HermitianOperator, N: int, ppt: bool
) -> SdpProblem:
    problem, _ = _compile_tripartite(rho, N, ppt)
    return problem


def _compile_tripartite(rho: HermitianOperator, N: int, ppt: bool):
    if rho.nfactors != 3:
        raise ValueError("tripartite query needs exactly three factors")
    d1, d2, d3 = rho.factor_dims
    s2, s3 = sym_dim(d2, N), sym_dim(d3, N)
    if d1 * s2 * s3 > _budget():
        raise BudgetExceeded(
            f"d_1*sym_dim(d_2,N)*sym_dim(d_3,N) = {d1 * s2 * s3} exceeds "
            f"{BUDGET_ENV} = {_budget()}"
        )
    t2, t3 = _LocalTables(d2, N), _LocalTables(d3, N)

    nx = d1 * s2 * s3

    def trace_apply(x):
        x6 = x.reshape(d1, s2, s3, d1, s2, s3)
        out = np.zeros((d1, d2, d3, d1, d2, d3), dtype=complex)
        for k2, k2p, b2, b2p, c2 in t2.tmap.rows:
            for k3, k3p, b3, b3p, c3 in t3.tmap.rows:
                out[:, b2, b3, :, b2p, b3p] += (c2 * c3) * x6[:, k2, k3, :, k2p, k3p]
        return out.reshape(rho.dim, rho.dim)

    def trace_adjoint(e):
        e6 = e.reshape(d1, d2, d3, d1, d2, d3)
        out = np.zeros((d1, s2, s3, d1, s2, s3), dtype=complex)
        for k2, k2p, b2, b2p, c2 in t2.tmap.rows:
            for k3, k3p, b3, b3p, c3 in t3.tmap.rows:
                out[:, k2, k3, :, k2p, k3p] += (c2 * c3) * e6[:, b2, b3, :, b2p, b3p]
        return out.reshape(nx, nx)

    o2, o3 = t2.pmap.size_out, t3.pmap.size_out
    ny = d1 * o2 * o3

    def ppt_adjoint(g):
        g6 = g.reshape(d1, o2, o3, d1, o2, o3)
        out = np.zeros((d1, s2, s3, d1, s2, s3), dtype=complex)
        for i2, j2, k2, k2p, c2 in t2.pmap.rows:
            for i3, j3, k3, k3p, c3 in t3.pmap.rows:
                out[:, k2, k3, :, k2p, k3p] += (c2 * c3) * g6[:, i2, i3, :, j2, j3]
        return out.reshape(nx, nx)

    block_sizes = [2 * nx] + ([2 * ny] if ppt and N >= 2 else [])
    nb = len(block_sizes)
    constraints = []
    herm = hermitian_basis(rho.dim)
    for e in herm:
        mats = [None] * nb
        mats[0] = embed_complex(trace_adjoint(e))
        rhs = 2.0 * float(np.real(np.sum(e.conj() * rho.entries)))
        constraints.append((mats, rhs))
    if nb == 2:
        for g in hermitian_basis(ny):
            mats = [None] * nb
            mats[0] = embed_complex(ppt_adjoint(g))
            mats[1] = -embed_complex(g)
            constraints.append((mats, 0.0))
    problem = SdpProblem(block_sizes, [None] * nb, constraints, "feasibility")
    return problem, (trace_apply, nx)


def tripartite_membership(
    rho: HermitianOperator, N: int, ppt: bool, tol: float = 1e-8,
    max_iter: int = 200,
) -> MembershipResult:
    problem, (trace_apply, nx) = _compile_tripartite(rho, N, ppt)
    try:
        sol = solve(problem, tol=tol, max_iter=max_iter)
    except SolverBreakdown as exc:
        return MembershipResult("undecided", detail=f"solver breakdown: {exc}")
    if sol.status in ("optimal", "max_iter"):
        x = unembed_real(sol.primal_blocks[0])
        eq = float(np.max(np.abs(trace_apply(x) - rho.entries)))
        lam = float(np.linalg.eigvalsh(x)[0])
        if eq <= FEAS_EQUALITY_TOL and lam >= -FEAS_PSD_SLACK * 100:
            return MembershipResult("feasible", extension=x, detail=f"residual {eq:.2e}")
        if sol.status == "max_iter":
            return MembershipResult("undecided", detail=f"max_iter; residual {eq:.2e}")
        return MembershipResult("undecided", detail=f"residual {eq:.2e}")
    if sol.status == "primal_infeasible":
        return MembershipResult("infeasible", detail="dual certificate")
    return MembershipResult("undecided", detail=f"solver status {sol.status}")
