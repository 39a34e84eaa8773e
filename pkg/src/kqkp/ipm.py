"""Predictor-corrector primal-dual interior-point method for the projected
relaxation.

The constraint set is fixed: n diagonal constraints, one rank-one equality
<ee', X> = (2k-n)^2 and one rank-one inequality <a_bar a_bar', X> <= (b-b')^2
with primal slack s and dual slack t.  All Schur-complement inner products
collapse to O(n^2) thanks to the rank-one structure, so one iteration costs
O(n^3) overall (dominated by the factorizations).

HKM scaling (Z^{-1}-weighted), infeasible start, Mehrotra-style corrector
with a centering fallback: if the corrector step would inflate the duality
gap, the direction is recomputed with more centering (the factorization is
reused, so retries are cheap).

The returned solution also carries a *certified* dual value: the dual
iterate is repaired to exact feasibility (clamping the inequality
multiplier and shifting the diagonal duals by the most negative eigenvalue
of the reconstructed dual slack matrix), which makes the reported upper
bound valid regardless of how tightly the solve converged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .relaxation import RelaxationData

OPTIMAL = "optimal"
SLOW_PROGRESS = "slow_progress"
ITER_LIMIT = "iter_limit"

DEFAULT_TOL = 1e-7
MAX_ITER = 100
STEP_FACTOR = 0.98


class NumericalBreakdown(RuntimeError):
    """Loss of positive definiteness not recoverable by step shortening."""


@dataclass
class SdpSolution:
    X: np.ndarray
    s: float
    y: np.ndarray  # length n+2: diag duals, equality dual, inequality dual
    Z: np.ndarray
    t: float
    primal_obj: float
    dual_obj: float
    certified_dual: float
    iterations: int
    status: str
    gap_history: list = field(default_factory=list)
    feas_history: list = field(default_factory=list)


def assemble_schur(Zi: np.ndarray, X: np.ndarray, a_bar: np.ndarray,
                   s: float, t: float) -> np.ndarray:
    """Specialized O(n^2) assembly of the (n+2) x (n+2) system matrix."""
    n = X.shape[0]
    M = np.empty((n + 2, n + 2))
    M[:n, :n] = Zi * X
    Zie = Zi.sum(axis=1)
    Xe = X.sum(axis=1)
    Zia = Zi @ a_bar
    Xa = X @ a_bar
    col_E = Zie * Xe
    col_A = Zia * Xa
    M[:n, n] = col_E
    M[n, :n] = col_E
    M[:n, n + 1] = col_A
    M[n + 1, :n] = col_A
    M[n, n] = Zie.sum() * Xe.sum()
    cross = Zia.sum() * Xa.sum()
    M[n, n + 1] = cross
    M[n + 1, n] = cross
    M[n + 1, n + 1] = (a_bar @ Zia) * (a_bar @ Xa) + s / t
    return M


def _constraint_op(W: np.ndarray, a_bar: np.ndarray) -> np.ndarray:
    """A(W) = (diag(W); <ee',W>; <a a',W>) for any (possibly nonsymmetric) W."""
    return np.concatenate([np.diag(W), [W.sum()], [a_bar @ W @ a_bar]])


def _adjoint_op(y: np.ndarray, Emat: np.ndarray, Amat: np.ndarray) -> np.ndarray:
    n = Emat.shape[0]
    return np.diag(y[:n]) + y[n] * Emat + y[n + 1] * Amat


def _max_step(P: np.ndarray, dP: np.ndarray, scal: float, dscal: float) -> float:
    """Largest alpha keeping P + alpha*dP psd and scal + alpha*dscal >= 0."""
    L = np.linalg.cholesky(P)
    W = sla.solve_triangular(L, dP, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = float(np.linalg.eigvalsh(0.5 * (W + W.T))[0])
    alpha = np.inf if lam >= -1e-14 else -1.0 / lam
    if dscal < 0:
        alpha = min(alpha, -scal / dscal)
    return alpha


def certify_dual(y: np.ndarray, C: np.ndarray, Emat: np.ndarray, Amat: np.ndarray,
                 rhs: np.ndarray) -> float:
    """Repair y to exact dual feasibility and return the (valid) dual value."""
    n = C.shape[0]
    y = y.copy()
    y[n + 1] = max(y[n + 1], 0.0)
    Zc = _adjoint_op(y, Emat, Amat) - C
    lam = float(np.linalg.eigvalsh(0.5 * (Zc + Zc.T))[0])
    if lam < 0:
        y[:n] += -lam * (1.0 + 1e-12) + 1e-14
    return float(rhs @ y)


def solve(data: RelaxationData, cost_override: np.ndarray | None = None,
          tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
          log_rows: list | None = None) -> SdpSolution:
    """Solve the relaxation (optionally with a replacement cost matrix).

    ``cost_override`` is used by the bundle method to pass C_bar - T'(gamma).
    ``log_rows``, when given, collects per-iteration tuples
    (iteration, primal_obj, dual_obj, relgap, alpha_p, alpha_d).
    """
    n = data.dim
    C = data.C_bar if cost_override is None else np.asarray(cost_override, dtype=float)
    if C.shape != (n, n):
        raise ValueError(f"cost matrix must be {n}x{n}")
    a_bar = data.a_bar
    e = np.ones(n)
    Emat = np.ones((n, n))
    Amat = np.outer(a_bar, a_bar)
    rhs = np.concatenate([e, [data.rhs_card], [data.rhs_cap]])
    rhs_norm = float(np.linalg.norm(rhs))
    C_norm = float(np.linalg.norm(C))
    feas_tol = max(tol, 1e-9)
    # absolute targets for the constraint residuals on X
    res_abs = 1e-6 if tol <= 1e-6 else 1e-4

    # infeasible start: X with unit diagonal, shaped toward e'Xe = rhs_card
    if n > 1:
        beta = (data.rhs_card - n) / (n * n - n)
        beta = float(np.clip(beta, -0.95 / (n - 1), 0.9))
    else:
        beta = 0.0
    X = (1.0 - beta) * np.eye(n) + beta * Emat
    zeta = max(1.0, C_norm / n)
    Z = zeta * np.eye(n)
    s = max(1.0, data.rhs_cap - float(a_bar @ X @ a_bar))
    t = zeta
    y = np.zeros(n + 2)
    y[n + 1] = t

    status = ITER_LIMIT
    iters = 0
    gap_history: list[float] = []
    feas_history: list[float] = []
    pobj = dobj = 0.0
    last_min_step = 1.0

    for it in range(max_iter):
        iters = it
        AX = _constraint_op(X, a_bar)
        rp = rhs - AX
        rp[n + 1] -= s
        Rd = C - (_adjoint_op(y, Emat, Amat) - Z)
        pobj = float(np.tensordot(C, X))
        dobj = float(rhs @ y)
        gap = float(np.tensordot(X, Z)) + s * t
        mu = gap / (n + 1)
        relgap = abs(pobj - dobj) / (1.0 + abs(dobj))
        rp_rel = float(np.linalg.norm(rp)) / (1.0 + rhs_norm)
        rd_rel = float(np.linalg.norm(Rd)) / (1.0 + C_norm)
        cap_viol = max(0.0, AX[n + 1] - data.rhs_cap)
        diag_res = float(np.abs(np.diag(X) - 1.0).max())
        card_res = abs(AX[n] - data.rhs_card)
        gap_history.append(relgap)
        feas_history.append(max(rp_rel, rd_rel))
        if log_rows is not None:
            log_rows.append((it, pobj, dobj, relgap, np.nan, np.nan))

        if (relgap <= tol and rp_rel <= feas_tol and rd_rel <= feas_tol
                and cap_viol <= res_abs and diag_res <= res_abs
                and card_res <= res_abs):
            status = OPTIMAL
            break
        if len(gap_history) >= 6 and gap_history[-1] > 0.99 * gap_history[-6] \
                and rp_rel <= feas_tol and rd_rel <= feas_tol:
            status = SLOW_PROGRESS
            break

        try:
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            if it == 0:
                raise NumericalBreakdown("dual iterate lost positive definiteness")
            status = SLOW_PROGRESS
            break
        Zi = sla.cho_solve((Lz, True), np.eye(n))
        Zi = 0.5 * (Zi + Zi.T)
        M = assemble_schur(Zi, X, a_bar, s, t)
        try:
            lu = sla.lu_factor(M)
        except (ValueError, np.linalg.LinAlgError):
            status = SLOW_PROGRESS
            break

        ZiRdX = Zi @ (Rd @ X)

        def direction(mu_t, Corr, scorr):
            stuff = mu_t * Zi - X + ZiRdX
            if Corr is not None:
                stuff = stuff - Zi @ Corr
            r = _constraint_op(stuff, a_bar) - rp
            r[n + 1] += (mu_t - s * t - scorr) / t
            dy = sla.lu_solve(lu, r)
            Aty = _adjoint_op(dy, Emat, Amat)
            dZ = Aty - Rd
            dX = stuff - Zi @ (Aty @ X)
            dX = 0.5 * (dX + dX.T)
            dt = float(dy[n + 1])
            ds = (mu_t - s * t - scorr) / t - (s / t) * dt
            return dX, ds, dy, dZ, dt

        try:
            # predictor (affine scaling)
            dXa, dsa, dya, dZa, dta = direction(0.0, None, 0.0)
            ap = min(1.0, _max_step(X, dXa, s, dsa))
            ad = min(1.0, _max_step(Z, dZa, t, dta))
            gap_aff = float(np.tensordot(X + ap * dXa, Z + ad * dZa)) \
                + (s + ap * dsa) * (t + ad * dta)
            sigma = float(np.clip((max(gap_aff, 0.0) / gap) ** 3, 1e-8, 1.0))
            if last_min_step < 0.2:
                sigma = max(sigma, 0.5)
            Corr = dZa @ dXa
            scorr = dsa * dta
            # corrector; recenter if the step would inflate the gap
            best = None
            for sg in (sigma, min(1.0, max(8 * sigma, 0.3)), 1.0):
                dX, ds, dy, dZ, dt = direction(sg * mu, Corr, scorr)
                ap = min(1.0, STEP_FACTOR * _max_step(X, dX, s, ds))
                ad = min(1.0, STEP_FACTOR * _max_step(Z, dZ, t, dt))
                Xn = X + ap * dX
                sn = s + ap * ds
                yn = y + ad * dy
                Zn = Z + ad * dZ
                tn = t + ad * dt
                pn = float(np.tensordot(C, Xn))
                dn = float(rhs @ yn)
                rg_new = abs(pn - dn) / (1.0 + abs(dn))
                if best is None or rg_new < best[0]:
                    best = (rg_new, Xn, sn, yn, Zn, tn, min(ap, ad), ap, ad)
                if rg_new <= max(relgap * (1.0 + 1e-9), 0.5 * tol):
                    break
            _, Xn, sn, yn, Zn, tn, last_min_step, ap, ad = best
        except np.linalg.LinAlgError:
            status = SLOW_PROGRESS
            break
        if log_rows is not None:
            log_rows[-1] = (it, pobj, dobj, relgap, ap, ad)

        X = 0.5 * (Xn + Xn.T)
        s = sn
        y = yn
        Z = 0.5 * (Zn + Zn.T)
        t = tn
    else:
        iters = max_iter

    certified = certify_dual(y, C, Emat, Amat, rhs)
    return SdpSolution(
        X=X, s=float(s), y=y, Z=Z, t=float(t),
        primal_obj=pobj, dual_obj=dobj, certified_dual=certified,
        iterations=iters, status=status, gap_history=gap_history,
        feas_history=feas_history,
    )


def bound(data: RelaxationData, cost_override: np.ndarray | None = None,
          tol: float = DEFAULT_TOL) -> float:
    """Certified upper bound in original objective units."""
    sol = solve(data, cost_override=cost_override, tol=tol)
    return sol.certified_dual + data.const_term
