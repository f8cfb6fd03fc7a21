"""Sparse NLP solver: augmented Lagrangian over a projected Gauss-Newton
inner loop.

Inequalities g(z) >= 0 become equalities g(z) - sigma = 0 with bound
sigma >= 0, so the inner problem is bound-constrained least squares of
the AL function. The inner solver takes Newton steps on the free set of
the Gauss-Newton model (exact for the least-squares objective, first
order in the constraints) with projected Armijo backtracking. Multiplier
updates follow sufficient feasibility decrease; otherwise the penalty
grows. A least-squares multiplier refit against the current Jacobian
closes the dual gap that first-order updates leave once the iterates
are nearly feasible. Everything is deterministic for fixed inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import block_diag, csr_matrix, diags, hstack as sp_hstack, identity
from scipy.sparse.linalg import splu

from .errors import EvaluationFailure, NonFiniteObjective


@dataclass
class SolveOptions:
    max_iter: int = 40  # outer iterations
    max_inner: int = 100
    kkt_tol: float = 1e-6
    constraint_tol: float = 1e-6
    penalty_init: float = 1e5
    penalty_growth: float = 10.0
    penalty_max: float = 1e12
    armijo: float = 1e-4
    max_halvings: int = 30
    reg_init: float = 1e-8
    seed: int = 0
    log_path: str | None = None
    verbose: int = 0  # 0 silent, 1 outer, 2 inner, 3 dual refit


@dataclass
class Solution:
    variables: np.ndarray
    status: str  # converged | max_iter | infeasible_stall
    stats: dict
    multipliers: np.ndarray
    iterates: list = field(default_factory=list)


def _pg_norm(w, g, lb, ub):
    """Infinity norm of the projected gradient step."""
    step = w - np.clip(w - g, lb, ub)
    return float(np.max(np.abs(step))) if step.size else 0.0


def _dual_fit(problem, z, lam, c, J, g, pg_cur):
    """Least-squares multiplier refit at a fixed primal point.

    First-order multiplier updates improve only in proportion to the
    constraint violation, so near feasibility the dual residual stalls
    while the primal one keeps shrinking. Fitting the multipliers
    directly against the current Jacobian closes that gap with one
    sparse SPD solve and no further constraint evaluations. Inequality
    rows take part only while active and keep nonnegative multipliers.
    The proximal term scaled by the current residual keeps degenerate
    rows from drifting: the relaxed contact rows lose strict constraint
    qualification at active corners by construction, leaving the plain
    normal equations rank deficient there.
    """
    eq_rows = np.nonzero(problem.eq_mask)[0]
    ineq_rows = np.nonzero(~problem.eq_mask)[0]
    lbz, ubz = problem.lb, problem.ub
    gL = g - J.T @ lam
    act = ineq_rows[c[ineq_rows] <= 1e-7]
    lo_tol = np.where(np.isfinite(lbz), 1e-10 * (1.0 + np.abs(lbz)), 0.0)
    hi_tol = np.where(np.isfinite(ubz), 1e-10 * (1.0 + np.abs(ubz)), 0.0)
    at_lb = np.isfinite(lbz) & (z <= lbz + lo_tol) & (gL > 0)
    at_ub = np.isfinite(ubz) & (z >= ubz - hi_tol) & (gL < 0)
    fidx = np.nonzero(~(at_lb | at_ub))[0]
    if fidx.size == 0:
        return lam
    nu = min(1e-2, max(1e-12, 0.1 * pg_cur))
    lam_new = lam
    for _drop in range(4):
        rows = np.concatenate([eq_rows, act])
        if rows.size == 0:
            return lam
        A = J[rows][:, fidx]
        M = (A @ A.T + nu * identity(rows.size)).tocsc()
        rhs = A @ g[fidx] + nu * lam[rows]
        try:
            sol = splu(M).solve(rhs)
        except RuntimeError:
            return lam
        if not np.all(np.isfinite(sol)):
            return lam
        lam_new = np.zeros_like(lam)
        lam_new[rows] = sol
        wrong = act[lam_new[act] < -1e-8]
        if wrong.size == 0:
            break
        act = act[np.isin(act, wrong, invert=True)]
    lam_new[ineq_rows] = np.clip(lam_new[ineq_rows], 0.0, None)
    return lam_new


def solve(problem, guess, opts=None):
    opts = opts or SolveOptions()
    t_start = time.perf_counter()
    n = problem.n_vars
    m = problem.m
    ineq_rows = np.nonzero(~problem.eq_mask)[0]
    ns = ineq_rows.size
    S = csr_matrix((np.ones(ns), (ineq_rows, np.arange(ns))), shape=(m, ns))
    lb = np.concatenate([problem.lb, np.zeros(ns)])
    ub = np.concatenate([problem.ub, np.full(ns, np.inf)])

    z0 = np.clip(np.asarray(guess, dtype=float), problem.lb, problem.ub)
    c_raw = problem.constraint_values(z0)
    if not np.all(np.isfinite(c_raw)):
        raise EvaluationFailure("constraints non-finite at the initial guess")
    if not np.isfinite(problem.objective_value(z0)):
        raise NonFiniteObjective("objective non-finite at the initial guess")
    w = np.concatenate([z0, np.clip(c_raw[ineq_rows], 0.0, None)])

    lam = np.zeros(m)
    rho = float(opts.penalty_init)
    delta = float(opts.reg_init)

    def violation(c_raw_vals):
        v = 0.0
        if m - ns:
            v = float(np.max(np.abs(c_raw_vals[problem.eq_mask]), initial=0.0))
        if ns:
            v = max(v, float(np.max(np.clip(-c_raw_vals[ineq_rows], 0.0, None), initial=0.0)))
        return v

    def values(w_try):
        z = w_try[:n]
        raw = problem.constraint_values(z)
        chat = raw - S @ w_try[n:]
        f = problem.objective_value(z)
        return f, raw, chat

    def al_value(f, chat):
        return f - lam @ chat + 0.5 * rho * (chat @ chat)

    def pg_of(lam_at, g_obj_at, J_at):
        g_lag = np.concatenate([g_obj_at - J_at.T @ lam_at, S.T @ lam_at])
        return _pg_norm(w, g_lag, lb, ub)

    iterates = []
    status = "max_iter"
    v_prev = np.inf
    total_inner = 0
    f_val = problem.objective_value(z0)
    pg_lag = np.inf
    v = violation(c_raw)
    stall = 0

    n_updates = 0
    for outer in range(opts.max_iter):
        omega = max(opts.kkt_tol, 1e-3 * 0.2**n_updates)
        phi_last = np.inf
        flat = 0
        steps_left = opts.max_inner
        # every exit of this loop happens right after an evaluation, so
        # raw/J/chat/g_obj/pg/pg_lag/v below always describe the current w
        while True:
            total_inner += 1
            z = w[:n]
            raw, J = problem.constraint_system(z)
            chat = raw - S @ w[n:]
            f_val, g_obj, H_obj = problem.objective_system(z)
            J_aug = sp_hstack([J, -S], format="csr")
            resid = rho * chat - lam
            g_al = np.concatenate([g_obj, np.zeros(ns)]) + J_aug.T @ resid
            phi = f_val - lam @ chat + 0.5 * rho * (chat @ chat)

            pg = _pg_norm(w, g_al, lb, ub)
            g_lag = np.concatenate([g_obj, np.zeros(ns)]) - J_aug.T @ lam
            pg_lag = _pg_norm(w, g_lag, lb, ub)
            v = violation(raw)
            if opts.verbose > 1:
                print(
                    f"  inner {total_inner:4d}  phi {phi:.8e}  pg {pg:.3e}  v {v:.3e}  delta {delta:.1e}"
                )
            if pg <= omega:
                break
            if v <= opts.constraint_tol and pg_lag <= opts.kkt_tol:
                break
            # plateau guard: repeated negligible decrease means the
            # Gauss-Newton model has run out of usable curvature here
            if phi >= phi_last - 1e-13 * (1.0 + abs(phi_last)):
                flat += 1
                if flat >= 3:
                    break
            else:
                flat = 0
            phi_last = phi
            steps_left -= 1
            if steps_left < 0:
                break

            # Gauss-Newton model of the AL on the free set
            lo_tol = np.where(np.isfinite(lb), 1e-11 * (1.0 + np.abs(lb)), 0.0)
            hi_tol = np.where(np.isfinite(ub), 1e-11 * (1.0 + np.abs(ub)), 0.0)
            at_lb = np.isfinite(lb) & (w <= lb + lo_tol) & (g_al > 0)
            at_ub = np.isfinite(ub) & (w >= ub - hi_tol) & (g_al < 0)
            free = ~(at_lb | at_ub)
            fidx = np.nonzero(free)[0]
            if fidx.size == 0:
                break
            H = block_diag((H_obj, csr_matrix((ns, ns))), format="csr")
            H = H + rho * (J_aug.T @ J_aug)

            step = None
            local_delta = delta
            for _ in range(8):
                Hreg = (H + diags(np.full(n + ns, local_delta))).tocsr()
                Hff = Hreg[fidx, :][:, fidx].tocsc()
                try:
                    step_f = splu(Hff).solve(-g_al[fidx])
                except RuntimeError:
                    local_delta = max(local_delta * 100.0, 1e-10)
                    continue
                if np.all(np.isfinite(step_f)):
                    step = np.zeros(n + ns)
                    step[fidx] = step_f
                    break
                local_delta = max(local_delta * 100.0, 1e-10)
            delta = local_delta
            if step is None:
                raise EvaluationFailure("inner linear systems unsolvable")

            alpha = 1.0
            accepted = False
            for _ in range(opts.max_halvings + 1):
                w_try = np.clip(w + alpha * step, lb, ub)
                dw = w_try - w
                if not np.any(dw):
                    break
                try:
                    f_try, raw_try, chat_try = values(w_try)
                except EvaluationFailure:
                    alpha *= 0.5
                    continue
                phi_try = al_value(f_try, chat_try)
                if np.isfinite(phi_try) and phi_try <= phi + opts.armijo * (g_al @ dw):
                    w = w_try
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                delta = max(delta * 0.25, opts.reg_init)
            else:
                # no admissible step along this direction; steepen the model
                delta *= 100.0
                if delta > 1e14:
                    break

        stalled = False
        if v <= max(0.5 * v_prev, opts.constraint_tol):
            # first-order multiplier update; the Lagrangian gradient at the
            # new multipliers equals the AL gradient already in hand, so the
            # dual residual is measured after the update, not one outer late
            lam = lam - rho * chat
            n_updates += 1
            stall = 0
            pg_lag = pg
        else:
            if rho >= opts.penalty_max:
                stall += 1
                stalled = stall >= 3
                lam = lam - rho * chat
            rho = min(rho * opts.penalty_growth, opts.penalty_max)
        v_prev = v

        if not stalled and v <= 1e-2 and pg_lag > opts.kkt_tol:
            lam_fit = _dual_fit(problem, w[:n], lam, raw, J, g_obj, pg_lag)
            pg_fit = pg_of(lam_fit, g_obj, J)
            if pg_fit < pg_lag:
                lam = lam_fit
                pg_lag = pg_fit
                if opts.verbose > 2:
                    print(f"    dual refit  kkt {pg_fit:.3e}")

        iterates.append(
            {
                "iter": outer,
                "objective": f_val,
                "kkt_residual": pg_lag,
                "max_violation": v,
                "penalty": rho,
            }
        )
        if opts.verbose:
            print(
                f"outer {outer:3d}  obj {f_val:.6e}  viol {v:.3e}  kkt {pg_lag:.3e}  rho {rho:.1e}"
            )
        if v <= opts.constraint_tol and pg_lag <= opts.kkt_tol:
            status = "converged"
            break
        if stalled:
            status = "infeasible_stall"
            break

    if opts.log_path:
        with open(opts.log_path, "w") as fh:
            fh.write("iter,objective,kkt_residual,max_violation,penalty\n")
            for row in iterates:
                fh.write(
                    f"{row['iter']},{row['objective']!r},{row['kkt_residual']!r},"
                    f"{row['max_violation']!r},{row['penalty']!r}\n"
                )

    stats = {
        "iterations": len(iterates),
        "inner_iterations": total_inner,
        "kkt_residual": float(pg_lag),
        "max_violation": float(v),
        "objective": float(f_val),
        "wall_time_s": time.perf_counter() - t_start,
    }
    return Solution(variables=w[:n].copy(), status=status, stats=stats, multipliers=lam, iterates=iterates)
