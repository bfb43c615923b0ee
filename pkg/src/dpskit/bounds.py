"""Closed-form quantities of the hierarchy: the Jacobi-root noise level g_N,
disentangling maps, robustness and distance bounds, required extension sizes,
complexity estimates, the PPT-only bounds, and the tightness example family.

g_N is one minus the largest root of a designated Jacobi polynomial.  Three
independent routes compute it:

* the tridiagonal eigenvalue route (primary; numerically stable),
* bisection root-refinement of the polynomial recurrence (internal check),
* the smallest generalized eigenvalue of the moment-matrix pencil (A, B)
  (:func:`g_N_via_pencil`, retained as an oracle).

The pencil's B matrix is Hilbert-conditioned, so that route reduces the
pencil with an exact rational LDL^T factorization before the (then well
conditioned) floating-point eigensolve; entries are built as exact products
``1/((n+m+1)...(n+m+d))``, which also removes any factorial overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import cos, e, lgamma, log10, pi, sqrt

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from .operators import (
    HermitianOperator,
    depolarize,
    identity,
    is_ppt,
    kron,
    partial_trace,
)

__all__ = [
    "JacobiRecurrence",
    "BoundReport",
    "jacobi_eval",
    "jacobi_recurrence",
    "tridiagonal_C",
    "g_N",
    "g_N_via_root",
    "g_N_via_pencil",
    "bessel_zero_first",
    "disentangle_sym",
    "disentangle_ppt",
    "bound_report",
    "frobenius_distance_exact",
    "required_N",
    "complexity_estimate",
    "ppt_alone",
    "multipartite_probs",
    "example_state",
]


def jacobi_eval(n: int, alpha: float, beta: float, x: float) -> float:
    """P_n^{(alpha,beta)}(x) by the standard three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    p_prev = 1.0
    if n == 0:
        return p_prev
    p = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0
    for k in range(2, n + 1):
        a1 = 2.0 * k * (k + alpha + beta) * (2.0 * k + alpha + beta - 2.0)
        a2 = (2.0 * k + alpha + beta - 1.0) * (alpha * alpha - beta * beta)
        a3 = (
            (2.0 * k + alpha + beta - 1.0)
            * (2.0 * k + alpha + beta)
            * (2.0 * k + alpha + beta - 2.0)
        )
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + alpha + beta)
        p, p_prev = ((a2 + a3 * x) * p - a4 * p_prev) / a1, p
    return p


@dataclass(frozen=True)
class JacobiRecurrence:
    """Coefficients of (1-y) p_n = alpha_n p_n + beta_n p_{n+1} + gamma_n p_{n-1}
    for the orthonormal Jacobi polynomials of weight (1-y)^a (1+y)^b."""

    alpha: float
    beta: float
    diag: np.ndarray  # alpha_n
    off: np.ndarray  # beta_n ( = gamma_{n+1} )

    def matrix(self) -> np.ndarray:
        c = np.diag(self.diag)
        if len(self.off):
            c += np.diag(self.off, 1) + np.diag(self.off, -1)
        return c


def jacobi_recurrence(alpha: float, beta: float, n: int) -> JacobiRecurrence:
    """First n rows of the (1-y)-recurrence for weight (1-y)^alpha (1+y)^beta.

    Standard orthonormal-Jacobi tridiagonal coefficients (Gautschi):
      y p_k = c_k p_{k+1} + a_k p_k + c_{k-1} p_{k-1},
      a_0 = (b-a)/(a+b+2),
      a_k = (b^2-a^2) / ((2k+a+b)(2k+a+b+2)),
      c_{k-1}^2 = 4k(k+a)(k+b)(k+a+b) / ((2k+a+b)^2 ((2k+a+b)^2 - 1)),
    so alpha_k = 1 - a_k and beta_k = -c_k.
    """
    a, b = float(alpha), float(beta)
    diag = np.zeros(n)
    off2 = np.zeros(max(n - 1, 0))
    for k in range(n):
        if k == 0:
            ak = (b - a) / (a + b + 2.0)
        else:
            denom = (2.0 * k + a + b) * (2.0 * k + a + b + 2.0)
            ak = (b * b - a * a) / denom
        diag[k] = 1.0 - ak
    for k in range(1, n):
        t = 2.0 * k + a + b
        off2[k - 1] = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (t * t * (t * t - 1.0))
    return JacobiRecurrence(a, b, diag, -np.sqrt(off2))


def _gn_params(d: int, N: int) -> tuple[int, int, int]:
    """(alpha, beta, polynomial degree) designated for g_N."""
    if d < 2 or N < 1:
        raise ValueError(f"need d >= 2 and N >= 1, got ({d}, {N})")
    if N % 2 == 0:
        return d - 2, 0, N // 2 + 1
    return d - 2, 1, (N + 1) // 2


def tridiagonal_C(d: int, N: int) -> np.ndarray:
    """The tridiagonal matrix whose spectrum is {1 - x : P(x) = 0} for the
    designated Jacobi polynomial; its smallest eigenvalue is g_N."""
    alpha, beta, deg = _gn_params(d, N)
    return jacobi_recurrence(alpha, beta, deg).matrix()


def _largest_root_bisect(alpha: int, beta: int, deg: int) -> float:
    """Largest root of P_deg^{(alpha,beta)} by sign scan in theta = arccos x."""
    f = lambda x: jacobi_eval(deg, alpha, beta, x)
    # P(1) = C(deg+alpha, deg) > 0; roots are ~uniform in theta
    steps = 40 * deg + 40
    prev_t, prev_f = 0.0, f(1.0)
    for i in range(1, steps + 1):
        t = pi * i / steps
        val = f(cos(t))
        if prev_f > 0.0 and val <= 0.0:
            lo, hi = cos(t), cos(prev_t)
            return brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
        prev_t, prev_f = t, val
    raise ArithmeticError(f"no sign change found for P_{deg}^{({alpha},{beta})}")


def g_N_via_root(d: int, N: int) -> float:
    """g_N by bisection root-refinement of the raw Jacobi recurrence."""
    alpha, beta, deg = _gn_params(d, N)
    return 1.0 - _largest_root_bisect(alpha, beta, deg)


def g_N(d: int, N: int, cross_check_tol: float = 1e-7) -> float:
    """One minus the largest root of the designated Jacobi polynomial.

    Primary route: smallest eigenvalue of the tridiagonal recurrence matrix.
    A bisection root-refinement of the raw recurrence cross-checks every
    call; disagreement raises (it indicates a recurrence bug, not noise).
    """
    alpha, beta, deg = _gn_params(d, N)
    val = float(np.linalg.eigvalsh(tridiagonal_C(d, N))[0])
    check = 1.0 - _largest_root_bisect(alpha, beta, deg)
    if abs(val - check) > cross_check_tol:
        raise ArithmeticError(
            f"g_N routes disagree at (d={d}, N={N}): {val} vs {check}"
        )
    return val


def _pencil_matrices(d: int, N: int):
    """Exact rational moment matrices (A, B) of the minimization pencil."""
    if N % 2 == 0:
        size, shift = N // 2 + 1, 0
    else:
        size, shift = (N + 1) // 2, 1

    def entry(s: int, nfac: int) -> Fraction:
        prod = 1
        for k in range(1, nfac + 1):
            prod *= s + k
        return Fraction(1, prod)

    amat = [[entry(n + m + shift, d) for m in range(size)] for n in range(size)]
    bmat = [[entry(n + m + shift, d - 1) for m in range(size)] for n in range(size)]
    return amat, bmat


def g_N_via_pencil(d: int, N: int) -> float:
    """2(d-1) times the smallest generalized eigenvalue of the (A, B) pencil.

    Exact rational LDL^T of B reduces the pencil before the floating-point
    eigensolve; see the module docstring.  Restricted to N <= 60 (the
    rational arithmetic grows quickly past desk scale).
    """
    if N > 60:
        raise ValueError("pencil route limited to N <= 60")
    amat, bmat = _pencil_matrices(d, N)
    n = len(amat)
    low = [[Fraction(0)] * n for _ in range(n)]
    dg = [Fraction(0)] * n
    for j in range(n):
        s = bmat[j][j] - sum(low[j][k] * low[j][k] * dg[k] for k in range(j))
        if s <= 0:
            raise ArithmeticError(f"pencil B matrix numerically singular at {j}")
        dg[j] = s
        low[j][j] = Fraction(1)
        for i in range(j + 1, n):
            low[i][j] = (
                bmat[i][j] - sum(low[i][k] * low[j][k] * dg[k] for k in range(j))
            ) / s
    # forward-substitute L^{-1} A L^{-T} exactly, then scale by D^{-1/2}
    work = [row[:] for row in amat]
    for i in range(n):
        for k in range(i):
            lik = low[i][k]
            if lik:
                for j in range(n):
                    work[i][j] -= lik * work[k][j]
    for j in range(n):
        for k in range(j):
            ljk = low[j][k]
            if ljk:
                for i in range(n):
                    work[i][j] -= ljk * work[i][k]
    scale = np.array([1.0 / sqrt(float(x)) for x in dg])
    core = np.array([[float(work[i][j]) for j in range(n)] for i in range(n)])
    core = scale[:, None] * core * scale[None, :]
    lam = float(np.linalg.eigvalsh(0.5 * (core + core.T))[0])
    return 2.0 * (d - 1) * lam


def bessel_zero_first(nu: float) -> float:
    """First positive zero of J_nu, bracketing scan plus Brent refinement."""
    if nu < 0 or nu > 50:
        raise ValueError("order must lie in [0, 50]")
    x = max(float(nu), 1e-6)
    step = 0.1 * max(1.0, (nu + 1.0) ** (1.0 / 3.0))
    f_lo = jv(nu, x)
    while f_lo <= 0.0:  # guard: start inside the positive lobe
        x *= 0.5
        f_lo = jv(nu, x)
        if x < 1e-12:
            raise ArithmeticError("failed to bracket the first Bessel zero")
    while True:
        x2 = x + step
        f_hi = jv(nu, x2)
        if f_lo > 0.0 and f_hi < 0.0:
            return float(brentq(lambda t: jv(nu, t), x, x2, xtol=1e-12))
        x, f_lo = x2, f_hi


# ---------------------------------------------------------------------------
# disentangling maps and bound evaluations
# ---------------------------------------------------------------------------


def _marginal_noise(rho: HermitianOperator):
    dA, dB = rho.factor_dims
    rho_a = partial_trace(rho, [1])
    return kron(rho_a, identity([dB])), dB


def disentangle_sym(rho: HermitianOperator, N: int) -> HermitianOperator:
    """N/(N+d) rho + 1/(N+d) rho_A (x) I_B; separable for any rho in S^N."""
    noise, d = _marginal_noise(rho)
    return (N / (N + d)) * rho + (1.0 / (N + d)) * noise


def disentangle_ppt(rho: HermitianOperator, N: int) -> HermitianOperator:
    """(1 - d g_N/(2(d-1))) rho + (g_N/(2(d-1))) rho_A (x) I_B."""
    noise, d = _marginal_noise(rho)
    g = g_N(d, N)
    w = g / (2.0 * (d - 1))
    return (1.0 - d * w) * rho + w * noise


@dataclass(frozen=True)
class BoundReport:
    """Every closed-form bound for a given (d_A, d_B, N)."""

    d_A: int
    d_B: int
    N: int
    g_N: float
    p_c_sym: float
    p_c_ppt: float
    robustness_sym: float
    robustness_ppt: float
    dist_trace_sym: float
    dist_op_sym: float
    dist_trace_ppt: float
    dist_op_ppt: float
    g_N_asymptotic: float
    bessel_zero: float
    ppt_distances_valid: bool  # the PPT distance guarantees need N >= 2


def bound_report(d_A: int, d_B: int, N: int) -> BoundReport:
    d = d_B
    g = g_N(d, N)
    j = bessel_zero_first(d - 2)
    return BoundReport(
        d_A=d_A,
        d_B=d_B,
        N=N,
        g_N=g,
        p_c_sym=d / (N + d),
        p_c_ppt=d * g / (2.0 * (d - 1)),
        robustness_sym=(d - 1) / N,
        robustness_ppt=g / (2.0 - d * g / (d - 1)),
        dist_trace_sym=2.0 * (d - 1) / (N + d - 1),
        dist_op_sym=(d - 1) / (N + d - 1),
        dist_trace_ppt=g,
        dist_op_ppt=g / 2.0,
        g_N_asymptotic=2.0 * (j / N) ** 2,
        bessel_zero=j,
        ppt_distances_valid=N >= 2,
    )


def frobenius_distance_exact(rho: HermitianOperator, N: int, ppt: bool) -> float:
    """Exact Frobenius distance between rho and its disentangled image."""
    dA, d = rho.factor_dims
    rho_a = partial_trace(rho, [1])
    excess = float(
        np.trace(rho.entries @ rho.entries).real
        - np.trace(rho_a.entries @ rho_a.entries).real / d
    )
    excess = max(excess, 0.0)
    if ppt:
        pref = d * g_N(d, N) / (2.0 * d - 2.0)
    else:
        pref = d / (N + d)
    return pref * sqrt(excess)


def required_N(delta: float, d_B: int, ppt: bool) -> int:
    """Smallest guaranteed extension size for trace-distance accuracy delta."""
    if not 0.0 < delta < 2.0:
        raise ValueError("delta must lie in (0, 2)")
    if d_B < 2:
        raise ValueError("d_B must be >= 2")
    if not ppt:
        return int(np.ceil((2.0 - delta) * (d_B - 1) / delta))
    n = max(int(np.ceil(sqrt(2.0) * bessel_zero_first(d_B - 2) / sqrt(delta))), 2)
    while g_N(d_B, n) > delta:
        n += 1
    return n


def complexity_estimate(d_A: int, d_B: int, delta: float):
    """log10 of the dominant SDP operation counts at accuracy delta.

    Returns (sym_ops, ppt_ops, sym_simplified, ppt_simplified), all as
    base-10 logarithms (the raw counts overflow quickly).
    """
    n_sym = required_N(delta, d_B, ppt=False)
    n_ppt = required_N(delta, d_B, ppt=True)
    log_dim_sym = lgamma(n_sym + d_B) - lgamma(n_sym + 1) - lgamma(d_B)
    log_dim_ppt = lgamma(n_ppt + d_B) - lgamma(n_ppt + 1) - lgamma(d_B)
    n_half = (n_ppt + 1) // 2
    log_dim_half = lgamma(n_half + d_B) - lgamma(n_half + 1) - lgamma(d_B)
    ln10 = np.log(10.0)
    sym_ops = (6.0 * np.log(d_A) + 6.0 * log_dim_sym) / ln10
    ppt_ops = (6.0 * np.log(d_A) + 4.0 * log_dim_ppt + 4.0 * log_dim_half) / ln10
    sym_simplified = 6.0 * log10(d_A) + 6.0 * d_B * log10(2.0 * e / delta)
    ppt_simplified = 6.0 * log10(d_A) + 4.0 * d_B * log10(e * e / delta)
    return sym_ops, ppt_ops, sym_simplified, ppt_simplified


def ppt_alone(rho: HermitianOperator, tol: float = 1e-9):
    """Local depolarizing that renders any PPT state separable, plus bounds.

    Returns (p_A, p_B, tilde, rg_bound, trace_bound).  Requires d_A >= 3,
    d_B >= 2 and a PPT input.
    """
    if rho.nfactors != 2:
        raise ValueError("ppt_alone expects a bipartite state")
    d_A, d_B = rho.factor_dims
    if d_A < 3 or d_B < 2:
        raise ValueError("requires d_A >= 3 and d_B >= 2")
    if not is_ppt(rho, [1], tol):
        raise ValueError("input state is not PPT")
    p_a = d_A * (d_A - 3) / (d_A**2 - 1)
    p_b = d_B * (d_B - 2) / (d_B**2 - 1)
    tilde = depolarize(depolarize(rho, p_a, 0), p_b, 1)
    rg_bound = (d_A + 1) * (d_B + 1) / 12.0 - 1.0
    trace_bound = 2.0 - 24.0 / ((d_A + 1) * (d_B + 1))
    return p_a, p_b, tilde, rg_bound, trace_bound


def multipartite_probs(dims, N: int, ppt: bool) -> list[float]:
    """Per-party depolarizing probabilities for local Bose-symmetric extensions."""
    out = []
    for d in dims:
        if d < 2:
            raise ValueError("all local dimensions must be >= 2")
        if ppt:
            out.append(d * g_N(d, N) / (2.0 * (d - 1)))
        else:
            out.append(d / (N + d))
    return out


def example_state(K: int) -> HermitianOperator:
    """The two-qubit reduction of the 2K-qubit overlap state; robustness 1/(2K-1)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    n = 2 * K - 1
    a = (K - 1) / (2.0 * n)
    b = K / (2.0 * n)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = a
    m[3, 3] = a
    sym = np.zeros(4, dtype=complex)
    sym[1] = 1.0
    sym[2] = 1.0
    m += b * np.outer(sym, sym)
    return HermitianOperator((2, 2), m)
