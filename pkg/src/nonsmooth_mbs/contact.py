"""Set-valued contact and friction on velocity level.

The normal cone / friction-interval inclusions are rewritten as proximal-point
equations and solved with a nonsmooth Gauss-Newton iteration whose generalized
Jacobian is assembled from Heaviside activity matrices.  The same machinery
covers non-impulsive forces and impulsive reactions; they differ only in the
affine map from multipliers to gap velocities.

Active contacts may be linearly dependent (e.g. a bilateral constraint posed
as two opposed unilateral rows), so the Newton update uses the Moore-Penrose
pseudoinverse instead of a plain solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

#: prox step parameter for force solves; impulse solves use 0.1 * dt
DEFAULT_R = 0.1
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100

# stagnation fallback: restart once from zero with halved r if the residual has
# not decreased by this relative amount over the trailing window
_STAGNATION_WINDOW = 10
_STAGNATION_DECREASE = 1e-3


class ContactSolverError(RuntimeError):
    """Gauss-Newton failure; carries the best residual reached."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


def prox_nonneg(x):
    """Projection onto the nonnegative half line."""
    return np.maximum(x, 0.0)


def prox_interval(x, bound):
    """Projection onto [-bound, +bound]; the planar specialization of the friction disk."""
    bound = np.asarray(bound, dtype=float)
    if np.any(bound < 0):
        raise ValueError("interval bound must be nonnegative")
    return np.clip(x, -bound, bound)


@dataclass
class ContactForces:
    lambda_N: np.ndarray
    lambda_T: np.ndarray
    active: np.ndarray
    iterations: int
    residual: float


@dataclass
class ImpulseForces:
    Lambda_N: np.ndarray
    Lambda_T: np.ndarray
    active: np.ndarray
    iterations: int
    residual: float


@dataclass
class SolveContext:
    """Affine contact-space problem restricted to the active set.

    The gap velocities obey ``gdot_X = F_X + scale * (G_XN lam_N + G_XT lam_T)``
    with Delassus blocks ``G_XY = W_X^T Mhat^{-1} W_Y``.  ``scale`` carries the
    integrator-dependent factor in front of the Delassus term, ``r`` the prox
    step parameter.  ``shift_N``/``shift_T`` are additive per-row offsets of the
    prox arguments (used for restitution terms in impulse problems).
    """

    G_NN: np.ndarray
    G_NT: np.ndarray
    G_TN: np.ndarray
    G_TT: np.ndarray
    F_N: np.ndarray
    F_T: np.ndarray
    scale: float
    r: float
    active: np.ndarray
    n_contacts: int
    mu: np.ndarray

    @property
    def n_active(self) -> int:
        return self.active.shape[0]

    def gap_velocities(self, lam_N, lam_T):
        gdot_N = self.F_N + self.scale * (self.G_NN @ lam_N + self.G_NT @ lam_T)
        gdot_T = self.F_T + self.scale * (self.G_TN @ lam_N + self.G_TT @ lam_T)
        return gdot_N, gdot_T


def build_context(
    W_N: np.ndarray,
    W_T: np.ndarray,
    M_hat: np.ndarray,
    rhs: np.ndarray,
    scale: float,
    r: float,
    active: np.ndarray,
    n_contacts: int,
    mu: np.ndarray,
    v_const: np.ndarray | None = None,
    shift_N: np.ndarray | None = None,
    shift_T: np.ndarray | None = None,
    solver=None,
) -> SolveContext:
    """Assemble Delassus blocks and the constant part of the gap-velocity map.

    ``W_N``/``W_T`` hold only the active columns.  The velocity produced by the
    integrator at zero multipliers is ``v_const + scale * Mhat^{-1} rhs``; its
    projection onto the contact directions gives ``F_N``/``F_T``.  A prepared
    ``solver(b)`` for ``M_hat`` may be passed to reuse an existing
    factorization.
    """
    na = active.shape[0]
    if solver is None:
        try:
            lu = lu_factor(M_hat)
        except np.linalg.LinAlgError as exc:
            raise ContactSolverError(
                f"singular effective matrix (cond ~ {np.linalg.cond(M_hat):.2e})", np.inf, 0
            ) from exc
        solver = lambda b: lu_solve(lu, b)  # noqa: E731
    X = solver(np.hstack([W_N, W_T])) if na else np.zeros((W_N.shape[0], 0))
    XN, XT = X[:, :na], X[:, na:]
    G_NN = W_N.T @ XN
    G_NT = W_N.T @ XT
    G_TN = W_T.T @ XN
    G_TT = W_T.T @ XT
    u = scale * solver(rhs)
    if v_const is not None:
        u = u + v_const
    F_N = W_N.T @ u
    F_T = W_T.T @ u
    if shift_N is not None:
        F_N = F_N + shift_N
    if shift_T is not None:
        F_T = F_T + shift_T
    return SolveContext(G_NN, G_NT, G_TN, G_TT, F_N, F_T, scale, r, active, n_contacts, mu)


def _residual(ctx: SolveContext, lam_N, lam_T, r):
    gdot_N, gdot_T = ctx.gap_velocities(lam_N, lam_T)
    p_N = lam_N - r * gdot_N
    p_T = lam_T - r * gdot_T
    f_N = lam_N - prox_nonneg(p_N)
    f_T = lam_T - prox_interval(p_T, ctx.mu * np.abs(lam_N))
    return f_N, f_T, p_N, p_T


def _gauss_newton_pass(ctx: SolveContext, tol: float, max_iter: int, r: float, start=None):
    """One Gauss-Newton run at a fixed prox parameter.

    Returns ``(lam_N, lam_T, iterations, residual, converged)``; gives up
    early (converged = False) when the residual stagnates or iterates leave
    the finite range, leaving fallbacks to the caller.
    """
    na = ctx.n_active
    eye = np.eye(na)
    if start is None:
        lam_N = np.zeros(na)
        lam_T = np.zeros(na)
    else:
        lam_N = start[0].copy()
        lam_T = start[1].copy()
    f_N, f_T, p_N, p_T = _residual(ctx, lam_N, lam_T, r)
    res = np.hypot(np.linalg.norm(f_N), np.linalg.norm(f_T))
    history = [res]
    for it in range(max_iter):
        if res <= tol:
            return lam_N, lam_T, it, res, True
        # Heaviside activity; prox arguments exactly on the set boundary count active
        bound = ctx.mu * np.abs(lam_N)
        theta_N = (p_N >= 0.0).astype(float)
        theta_T = (np.abs(p_T) <= bound).astype(float)
        rs = r * ctx.scale
        J = np.eye(2 * na)
        J[:na, :na] -= theta_N[:, None] * (eye - rs * ctx.G_NN)
        J[:na, na:] -= theta_N[:, None] * (-rs * ctx.G_NT)
        J[na:, :na] -= theta_T[:, None] * (-rs * ctx.G_TN)
        J[na:, na:] -= theta_T[:, None] * (eye - rs * ctx.G_TT)
        # slip rows: keep the friction-bound derivative d(mu |lam_N|)/d(lam_N);
        # the plain Gauss-Newton Jacobian drops it and can cycle between branches
        slip = theta_T == 0.0
        if np.any(slip):
            sgn_bound = np.where(p_T > bound, 1.0, -1.0)
            sgn_lam = np.where(lam_N != 0.0, np.sign(lam_N), 1.0)
            rows = np.flatnonzero(slip)
            J[na + rows, rows] += -sgn_bound[rows] * ctx.mu[rows] * sgn_lam[rows]
        step = np.linalg.pinv(J, rcond=1e-12) @ np.concatenate([f_N, f_T])
        lam_N = lam_N - step[:na]
        lam_T = lam_T - step[na:]
        if not (np.all(np.isfinite(lam_N)) and np.all(np.isfinite(lam_T))):
            return lam_N, lam_T, it + 1, np.inf, False
        f_N, f_T, p_N, p_T = _residual(ctx, lam_N, lam_T, r)
        res = np.hypot(np.linalg.norm(f_N), np.linalg.norm(f_T))
        history.append(res)
        if (
            len(history) > _STAGNATION_WINDOW
            and history[-1] > (1.0 - _STAGNATION_DECREASE) * history[-1 - _STAGNATION_WINDOW]
        ):
            return lam_N, lam_T, it + 1, res, False
    return lam_N, lam_T, max_iter, res, res <= tol


_FIXED_POINT_MAX_ITER = 50_000


def _projected_fixed_point(ctx: SolveContext, tol: float):
    """Forward-backward splitting fallback with an auto-scaled step.

    The iteration ``lam <- proj(lam - rhat * gdot(lam))`` is a contraction-type
    (averaged) map for ``rhat * scale * |G| < 2``; it is slow on nearly
    dependent contacts but unconditionally steady where the Gauss-Newton
    branch iteration cycles.  Convergence is measured with the context's own
    prox residual.
    """
    na = ctx.n_active
    G = np.block([[ctx.G_NN, ctx.G_NT], [ctx.G_TN, ctx.G_TT]])
    gnorm = np.linalg.norm(G, 2) * abs(ctx.scale)
    rhat = 1.0 / gnorm if gnorm > 0 else 1.0
    lam_N = np.zeros(na)
    lam_T = np.zeros(na)
    it = 0
    res = np.inf
    while it < _FIXED_POINT_MAX_ITER:
        gdot_N, gdot_T = ctx.gap_velocities(lam_N, lam_T)
        lam_N = prox_nonneg(lam_N - rhat * gdot_N)
        if not np.all(np.isfinite(lam_N)):
            return lam_N, lam_T, it, np.inf, False
        lam_T = prox_interval(lam_T - rhat * gdot_T, ctx.mu * np.abs(lam_N))
        it += 1
        if it % 4 == 0 or it < 32:
            f_N, f_T, _, _ = _residual(ctx, lam_N, lam_T, ctx.r)
            res = np.hypot(np.linalg.norm(f_N), np.linalg.norm(f_T))
            if res <= tol:
                return lam_N, lam_T, it, res, True
    return lam_N, lam_T, it, res, False


def _gauss_newton(ctx: SolveContext, tol: float, max_iter: int, warm_start=None):
    """Multiplier solve shared by force and impulse problems.

    Primary path is the nonsmooth Gauss-Newton iteration with pseudoinverse
    updates, optionally seeded with the multipliers of the previous solve at
    the same point; on stagnation it restarts from zero with the prox
    parameter halved, then falls back to the projected fixed-point iteration
    (the branch iteration can cycle on nearly dependent contacts, e.g. two
    slider corners on one wall with a small rotary inertia).  Returns
    full-length multiplier vectors with zeros off the active set.
    """
    lam_full_N = np.zeros(ctx.n_contacts)
    lam_full_T = np.zeros(ctx.n_contacts)
    if ctx.n_active == 0:
        return lam_full_N, lam_full_T, 0, 0.0

    start = None
    if warm_start is not None:
        wN, wT = warm_start
        if np.any(wN) or np.any(wT):
            start = (wN[ctx.active], wT[ctx.active])
    lam_N, lam_T, it, res, ok = _gauss_newton_pass(ctx, tol, max_iter, ctx.r, start)
    total_it = it
    if not ok and start is not None:
        lam_N, lam_T, it, res, ok = _gauss_newton_pass(ctx, tol, max_iter, ctx.r)
        total_it += it
    if not ok:
        lam_N, lam_T, it, res, ok = _gauss_newton_pass(ctx, tol, max_iter, 0.5 * ctx.r)
        total_it += it
    if not ok:
        lam_N, lam_T, it, res, ok = _projected_fixed_point(ctx, tol)
        total_it += it
    if not ok:
        raise ContactSolverError("contact solve failed on all strategies", res, total_it)
    lam_full_N[ctx.active] = lam_N
    lam_full_T[ctx.active] = lam_T
    return lam_full_N, lam_full_T, total_it, res


def solve_contact_forces(
    ctx: SolveContext,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    warm_start: ContactForces | None = None,
) -> ContactForces:
    """Non-impulsive contact forces over the active set of the predictor state."""
    warm = None
    if warm_start is not None:
        warm = (warm_start.lambda_N, warm_start.lambda_T)
    lam_N, lam_T, it, res = _gauss_newton(ctx, tol, max_iter, warm)
    return ContactForces(lam_N, lam_T, ctx.active, it, res)


def solve_impulses(
    ctx: SolveContext, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> ImpulseForces:
    """Impulsive reactions; the context must carry plain-mass Delassus blocks,
    unit scale and the restitution shifts in ``F_N``/``F_T``."""
    L_N, L_T, it, res = _gauss_newton(ctx, tol, max_iter)
    return ImpulseForces(L_N, L_T, ctx.active, it, res)


def build_impulse_context(
    M: np.ndarray,
    W_N: np.ndarray,
    W_T: np.ndarray,
    v_minus: np.ndarray,
    eps_N: np.ndarray,
    eps_T: np.ndarray,
    mu: np.ndarray,
    active: np.ndarray,
    r: float,
) -> SolveContext:
    """Impulse problem at the end of a step over all contacts closed there.

    The prox arguments are the post-impact gap velocities augmented by the
    Newton restitution terms ``eps * gdot^-``.
    """
    n_contacts = W_N.shape[1]
    WNa = W_N[:, active]
    WTa = W_T[:, active]
    gdot_N_minus = WNa.T @ v_minus
    gdot_T_minus = WTa.T @ v_minus
    return build_context(
        WNa,
        WTa,
        M,
        np.zeros(M.shape[0]),
        scale=1.0,
        r=r,
        active=active,
        n_contacts=n_contacts,
        mu=mu[active],
        v_const=v_minus,
        shift_N=eps_N[active] * gdot_N_minus,
        shift_T=eps_T[active] * gdot_T_minus,
    )


def apply_impulse(
    M: np.ndarray,
    v_minus: np.ndarray,
    W_N: np.ndarray,
    W_T: np.ndarray,
    Lambda_N: np.ndarray,
    Lambda_T: np.ndarray,
) -> np.ndarray:
    """Velocity jump from impulsive reactions; identity when all impulses vanish."""
    if not (np.any(Lambda_N) or np.any(Lambda_T)):
        return v_minus
    imp = W_N @ Lambda_N + W_T @ Lambda_T
    try:
        return v_minus + np.linalg.solve(M, imp)
    except np.linalg.LinAlgError as exc:
        raise ContactSolverError("singular mass matrix in impulse update", np.inf, 0) from exc
