"""Implicit base integration schemes and the mixed-stepping driver.

Each base scheme advances one step with a fixed-point iteration that refreshes
the nonlinear system matrices at the newest iterate and embeds a velocity-level
contact-force solve.  The mixed driver then checks whether any contact closed
during the step and, if so, corrects the velocities with an impulsive solve on
the same kinematic level.

Scheme notes
------------
* generalized-alpha: one-stage Newmark-type update with an acceleration-like
  auxiliary variable carrying the algorithmic damping.
* Bathe: two sub-steps per step, trapezoidal rule then 3-point Euler backward;
  each sub-step runs its own fixed-point loop and contact solve.
* ED-alpha: two coupled stages (a jump stage at the beginning of the interval
  and the end point) solved simultaneously in a doubled velocity system; the
  contact solve couples the multipliers of both stages.
* Moreau midpoint: classic first-order timestepping baseline; impacts are
  absorbed by the single velocity-level inclusion, so the mixed driver applies
  no separate correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .contact import (
    ContactForces,
    ContactSolverError,
    ImpulseForces,
    apply_impulse,
    build_context,
    build_impulse_context,
    solve_contact_forces,
    solve_impulses,
)
from .core import GeneralizedState, MechanicalModel, active_set, make_initial_state, newly_closed

SCHEMES = ("generalized_alpha", "bathe", "ed_alpha", "moreau")


class StepError(RuntimeError):
    """Fixed-point non-convergence or propagated solver failure."""


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int, t: float):
        super().__init__(f"{message} (step {step}, t = {t:.6e} s)")
        self.step = step
        self.t = t


def galpha_params(rho_inf: float) -> tuple[float, float, float, float]:
    """Optimal generalized-alpha parameters (alpha_m, alpha_f, gamma, beta) for a
    prescribed high-frequency spectral radius."""
    if not 0.0 <= rho_inf <= 1.0:
        raise ValueError("rho_inf must lie in [0, 1]")
    alpha_m = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0)
    alpha_f = rho_inf / (rho_inf + 1.0)
    gamma = 0.5 - alpha_m + alpha_f
    beta = 0.25 * (1.0 - alpha_m + alpha_f) ** 2
    return alpha_m, alpha_f, gamma, beta


def ed_params(rho_inf: float) -> tuple[float, float]:
    """Energy-decaying scheme parameters (alpha, alpha_AR) for a prescribed
    high-frequency spectral radius; alpha_AR = 1/6 minimizes period elongation."""
    if not 0.0 <= rho_inf <= 1.0:
        raise ValueError("rho_inf must lie in [0, 1]")
    return (1.0 - rho_inf) / (1.0 + rho_inf), 1.0 / 6.0


def galpha_stable(alpha_m: float, alpha_f: float, beta: float) -> bool:
    return alpha_m <= alpha_f <= 0.5 and beta >= 0.25 + 0.5 * (alpha_f - alpha_m)


@dataclass
class IntegratorConfig:
    """Scheme selection and numerical parameters for one simulation.

    The generalized-alpha set (alpha_m, alpha_f, gamma, beta) and the ED-alpha
    ``alpha`` default to their optimal values derived from ``rho_inf`` but may
    be overridden individually.  ``fp_tol`` is scale-free: the fixed point
    stops when the velocity update is below ``fp_tol * (1 + |v|)``.
    """

    scheme: str = "generalized_alpha"
    dt: float = 1e-3
    rho_inf: float = 0.8
    alpha_m: float | None = None
    alpha_f: float | None = None
    gamma: float | None = None
    beta: float | None = None
    alpha: float | None = None
    alpha_AR: float = 1.0 / 6.0
    fp_tol: float = 1e-10
    fp_stall_tol: float = 1e-6
    fp_max_iter: int = 50
    contact_tol: float = 1e-10
    contact_max_iter: int = 100
    r_force: float = 0.1
    r_impulse: float | None = None  # defaults to 0.1 * dt
    contact_warm_start: bool = True
    # diagnostic: solve the generalized-alpha contact forces from the
    # acceleration-level inclusion instead of the velocity-level one
    contact_level: str = "velocity"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme == "generalized_alpha":
            am, af, g, b = self.galpha_parameters()
            if not galpha_stable(am, af, b):
                warnings.warn(
                    "generalized-alpha parameters violate the unconditional "
                    f"stability conditions (alpha_m={am:.4g}, alpha_f={af:.4g}, beta={b:.4g})",
                    stacklevel=2,
                )
        if self.contact_level not in ("velocity", "acceleration"):
            raise ValueError("contact_level must be 'velocity' or 'acceleration'")
        if self.scheme == "ed_alpha":
            if self.alpha_AR < 0:
                raise ValueError("alpha_AR must be nonnegative")
            if self.alpha_AR == 0:
                raise ValueError("alpha_AR = 0 is singular in the stage elimination; use a small positive value")

    def galpha_parameters(self) -> tuple[float, float, float, float]:
        am, af, g, b = galpha_params(self.rho_inf)
        if self.alpha_m is not None:
            am = self.alpha_m
        if self.alpha_f is not None:
            af = self.alpha_f
        if self.gamma is not None:
            g = self.gamma
        if self.beta is not None:
            b = self.beta
        return am, af, g, b

    def ed_parameters(self) -> tuple[float, float]:
        alpha, _ = ed_params(self.rho_inf)
        if self.alpha is not None:
            alpha = self.alpha
        return alpha, self.alpha_AR

    @property
    def r_impulse_value(self) -> float:
        return 0.1 * self.dt if self.r_impulse is None else self.r_impulse


@dataclass
class StepReport:
    """Outcome of one mixed step.

    ``forces`` holds one entry per contact solve point (one for
    generalized-alpha and Moreau, two for Bathe and ED-alpha).  ``impulses``
    is present exactly when a new contact closed during the step and an
    impulsive correction ran.
    """

    state: GeneralizedState
    forces: list[ContactForces]
    impulses: ImpulseForces | None
    fp_iterations: int
    impacted: bool
    g_N_start: np.ndarray | None = field(default=None, repr=False)
    g_N_end: np.ndarray | None = field(default=None, repr=False)


def _zero_forces(m: int) -> ContactForces:
    return ContactForces(np.zeros(m), np.zeros(m), np.zeros(0, dtype=int), 0, 0.0)


class _FixedPointMonitor:
    """Convergence check for the nonlinear refresh iteration.

    Primary criterion is a scale-free velocity update below ``fp_tol``.  The
    backward-difference velocity recovery amplifies linear-solver roundoff by
    O(1/dt), so the update can level off above that tolerance; an iteration
    that has stopped improving inside the ``fp_stall_tol`` guard band is then
    accepted at its noise floor.
    """

    def __init__(self, config: IntegratorConfig):
        self.tol = config.fp_tol
        self.stall_tol = config.fp_stall_tol
        self.best = np.inf
        self.no_improvement = 0

    def converged(self, v_new: np.ndarray, v_prev: np.ndarray) -> bool:
        dv = np.linalg.norm(v_new - v_prev)
        scale = 1.0 + np.linalg.norm(v_new)
        if dv < self.tol * scale:
            return True
        if dv < 0.5 * self.best:
            self.best = dv
            self.no_improvement = 0
        else:
            self.best = min(self.best, dv)
            self.no_improvement += 1
        return self.no_improvement >= 3 and dv < self.stall_tol * scale


def step_generalized_alpha(
    model: MechanicalModel, state: GeneralizedState, config: IntegratorConfig
) -> StepReport:
    """One generalized-alpha step; returns the pre-correction state."""
    dt = config.dt
    am, af, gam, bet = config.galpha_parameters()
    kappa = (1.0 - af) / (1.0 - am)
    scale = dt * gam * kappa
    q_i, v_i, a_i, A_i = state.q, state.v_plus, state.a, state.aux

    ev = model.evaluate(q_i, v_i)
    g_N_start = ev.g_N.copy()
    act = active_set(ev.g_N)
    m = ev.n_contacts

    # constant parts of the Newmark-type updates over the step
    c_a = af / (1.0 - am) * a_i - am / (1.0 - am) * A_i
    v_kin = v_i + dt * (1.0 - gam) * A_i + dt * gam * c_a

    forces = _zero_forces(m)
    v_prev = v_i
    monitor = _FixedPointMonitor(config)
    for k in range(config.fp_max_iter):
        M_hat = ev.M + scale * ev.C + dt * dt * bet * kappa * ev.K
        R_hat = (
            ev.h
            - ev.C @ v_i
            - (dt * (1.0 - gam) - dt * gam * am / (1.0 - am)) * (ev.C @ A_i)
            - dt * gam * af / (1.0 - am) * (ev.C @ a_i)
            - ev.K @ q_i
            - dt * (ev.K @ v_i)
            - (dt * dt * (0.5 - bet) - dt * dt * bet * am / (1.0 - am)) * (ev.K @ A_i)
            - dt * dt * bet * af / (1.0 - am) * (ev.K @ a_i)
        )
        try:
            lu = lu_factor(M_hat)
        except np.linalg.LinAlgError as exc:
            raise StepError("singular effective mass matrix") from exc
        solver = lambda b: lu_solve(lu, b)  # noqa: E731
        if act.size:
            if config.contact_level == "acceleration":
                # gap accelerations W^T a(lam); enforces complementarity on
                # acceleration level (exhibits the usual linear drift-off)
                ctx = build_context(
                    ev.W_N[:, act], ev.W_T[:, act], M_hat, R_hat,
                    scale=1.0, r=config.r_force, active=act, n_contacts=m,
                    mu=model.mu[act], solver=solver,
                )
            else:
                ctx = build_context(
                    ev.W_N[:, act],
                    ev.W_T[:, act],
                    M_hat,
                    R_hat,
                    scale=scale,
                    r=config.r_force,
                    active=act,
                    n_contacts=m,
                    mu=model.mu[act],
                    v_const=v_kin,
                    solver=solver,
                )
            forces = solve_contact_forces(
                ctx, config.contact_tol, config.contact_max_iter,
                warm_start=forces if config.contact_warm_start and k else None,
            )
        a_new = solver(R_hat + ev.W_N @ forces.lambda_N + ev.W_T @ forces.lambda_T)
        A_new = kappa * a_new + c_a
        v_new = v_i + dt * (1.0 - gam) * A_i + dt * gam * A_new
        q_new = q_i + dt * v_i + dt * dt * (0.5 - bet) * A_i + dt * dt * bet * A_new
        if not np.all(np.isfinite(v_new)):
            raise StepError("non-finite iterates in generalized-alpha step")
        if monitor.converged(v_new, v_prev):
            new_state = GeneralizedState(state.t + dt, q_new, v_new, v_new, a_new, A_new)
            return StepReport(new_state, [forces], None, k + 1, False, g_N_start)
        v_prev = v_new
        ev = model.evaluate(q_new, v_new)
    raise StepError(f"generalized-alpha fixed point did not converge in {config.fp_max_iter} iterations")


def _bathe_substep(model, config, q_i, v_i, a_i, coeffs, q_ref, v_ref, ev, act, v0):
    """Shared fixed-point loop for the two Bathe sub-steps.

    ``coeffs`` packs the effective-matrix factors ``(cM, cC, scale)`` with
    ``K_hat = cM*M + cC*C + K`` and gap-velocity scale ``scale``;
    ``q_ref``/``v_ref`` are the states entering the right-hand side; ``v0``
    seeds the convergence check.
    """
    dt = config.dt
    cM, cC, scale = coeffs
    m = ev.n_contacts
    forces = _zero_forces(m)
    v_prev = v0
    monitor = _FixedPointMonitor(config)
    first = scale == 4.0 / dt
    for k in range(config.fp_max_iter):
        K_hat = cM * ev.M + cC * ev.C + ev.K
        if first:
            R_hat = ev.h + ev.M @ (16.0 / dt**2 * q_i + 8.0 / dt * v_i + a_i) + ev.C @ (
                4.0 / dt * q_i + v_i
            )
            v_const = -v_i - 4.0 / dt * q_i
        else:
            q_h, v_h = q_ref, v_ref
            R_hat = ev.h + ev.M @ (
                12.0 / dt**2 * q_h - 3.0 / dt**2 * q_i + 4.0 / dt * v_h - 1.0 / dt * v_i
            ) + ev.C @ (4.0 / dt * q_h - 1.0 / dt * q_i)
            v_const = 1.0 / dt * q_i - 4.0 / dt * q_h
        try:
            lu = lu_factor(K_hat)
        except np.linalg.LinAlgError as exc:
            raise StepError("singular effective stiffness matrix") from exc
        solver = lambda b: lu_solve(lu, b)  # noqa: E731
        if act.size:
            ctx = build_context(
                ev.W_N[:, act],
                ev.W_T[:, act],
                K_hat,
                R_hat,
                scale=scale,
                r=config.r_force,
                active=act,
                n_contacts=m,
                mu=model.mu[act],
                v_const=v_const,
                solver=solver,
            )
            forces = solve_contact_forces(
                ctx, config.contact_tol, config.contact_max_iter,
                warm_start=forces if config.contact_warm_start and k else None,
            )
        q_new = solver(R_hat + ev.W_N @ forces.lambda_N + ev.W_T @ forces.lambda_T)
        if not np.all(np.isfinite(q_new)):
            raise StepError("non-finite iterates in Bathe sub-step")
        if first:
            v_new = -v_i + 4.0 / dt * (q_new - q_i)
            a_new = -a_i + 4.0 / dt * (v_new - v_i)
        else:
            v_new = 1.0 / dt * q_i - 4.0 / dt * q_ref + 3.0 / dt * q_new
            a_new = 1.0 / dt * v_i - 4.0 / dt * v_ref + 3.0 / dt * v_new
        if monitor.converged(v_new, v_prev):
            return q_new, v_new, a_new, forces, k + 1
        v_prev = v_new
        ev = model.evaluate(q_new, v_new)
    raise StepError(f"Bathe fixed point did not converge in {config.fp_max_iter} iterations")


def step_bathe(model: MechanicalModel, state: GeneralizedState, config: IntegratorConfig) -> StepReport:
    """One Bathe step: trapezoidal half step, then 3-point Euler backward."""
    dt = config.dt
    q_i, v_i, a_i = state.q, state.v_plus, state.a

    ev = model.evaluate(q_i, v_i)
    g_N_start = ev.g_N.copy()
    act1 = active_set(ev.g_N)
    q_h, v_h, a_h, forces_h, it1 = _bathe_substep(
        model, config, q_i, v_i, a_i, (16.0 / dt**2, 4.0 / dt, 4.0 / dt), None, None, ev, act1, v_i
    )

    ev_h = model.evaluate(q_h, v_h)
    act2 = active_set(ev_h.g_N)
    q_1, v_1, a_1, forces_1, it2 = _bathe_substep(
        model, config, q_i, v_i, a_i, (9.0 / dt**2, 3.0 / dt, 3.0 / dt), q_h, v_h, ev_h, act2, v_h
    )

    new_state = GeneralizedState(state.t + dt, q_1, v_1, v_1, a_1, a_1.copy())
    return StepReport(new_state, [forces_h, forces_1], None, it1 + it2, False, g_N_start)


def _ed_coefficients(dt: float, alpha: float, alpha_AR: float) -> np.ndarray:
    """Stage-elimination coefficients of the energy-decaying scheme.

    Index 0 is unused so that c[1]..c[15] match the update formulas; c[7] and
    c[14] are the dimensionally consistent acceleration weights.
    """
    den = dt * alpha_AR * (alpha + 1.0)
    c = np.zeros(16)
    c[1] = 1.0
    c[2] = dt / 2.0
    c[3] = dt / 2.0
    c[4] = 2.0 * alpha_AR * alpha / den
    c[5] = 2.0 * (0.5 - alpha_AR * alpha) / den
    c[6] = -1.0 / den
    c[7] = (1.0 - alpha) / (alpha + 1.0)
    c[8] = -dt * alpha_AR
    c[9] = 1.0
    c[10] = dt * alpha_AR * alpha
    c[11] = dt * alpha_AR * (1.0 - alpha)
    c[12] = 1.0 / den
    c[13] = -2.0 * (0.5 + alpha_AR) / den
    c[14] = -(1.0 - alpha) / (alpha + 1.0)
    c[15] = 2.0 * alpha_AR / den
    return c


def step_ed_alpha(model: MechanicalModel, state: GeneralizedState, config: IntegratorConfig) -> StepReport:
    """One energy-decaying step on the doubled velocity system.

    The stage velocity (jump point at the interval start) and the end velocity
    are solved simultaneously; the contact multipliers of both points are
    stacked and solved jointly on the doubled Delassus operator.
    """
    dt = config.dt
    alpha, aar = config.ed_parameters()
    c = _ed_coefficients(dt, alpha, aar)
    q_i, v_i, a_i = state.q, state.v_plus, state.a
    n = model.n_dof

    ev_e = model.evaluate(q_i, v_i)  # end-point quantities
    ev_j = ev_e  # stage quantities
    g_N_start = ev_e.g_N.copy()
    act = active_set(ev_e.g_N)
    m = ev_e.n_contacts
    na = act.size

    forces_e = _zero_forces(m)
    forces_j = _zero_forces(m)
    stacked = _zero_forces(2 * m)
    v_prev = v_i
    monitor = _FixedPointMonitor(config)
    for k in range(config.fp_max_iter):
        M_c = np.zeros((2 * n, 2 * n))
        M_c[:n, :n] = c[4] * ev_e.M + c[3] * ev_e.K + ev_e.C
        M_c[:n, n:] = c[6] * ev_e.M + c[2] * ev_e.K
        M_c[n:, :n] = c[15] * ev_j.M + c[8] * ev_j.K
        M_c[n:, n:] = c[12] * ev_j.M + c[10] * ev_j.K + ev_j.C
        R_c = np.concatenate(
            [
                ev_e.h - c[5] * (ev_e.M @ v_i) - c[7] * (ev_e.M @ a_i) - c[1] * (ev_e.K @ q_i),
                ev_j.h
                - c[13] * (ev_j.M @ v_i)
                - c[14] * (ev_j.M @ a_i)
                - c[9] * (ev_j.K @ q_i)
                - c[11] * (ev_j.K @ v_i),
            ]
        )
        try:
            lu = lu_factor(M_c)
        except np.linalg.LinAlgError as exc:
            raise StepError("singular doubled effective matrix") from exc
        solver = lambda b: lu_solve(lu, b)  # noqa: E731
        lam_N = np.zeros(2 * m)
        lam_T = np.zeros(2 * m)
        if na:
            W_Nc = np.zeros((2 * n, 2 * na))
            W_Tc = np.zeros((2 * n, 2 * na))
            W_Nc[:n, :na] = ev_e.W_N[:, act]
            W_Nc[n:, na:] = ev_j.W_N[:, act]
            W_Tc[:n, :na] = ev_e.W_T[:, act]
            W_Tc[n:, na:] = ev_j.W_T[:, act]
            act_c = np.concatenate([act, act + m])
            ctx = build_context(
                W_Nc,
                W_Tc,
                M_c,
                R_c,
                scale=1.0,
                r=config.r_force,
                active=act_c,
                n_contacts=2 * m,
                mu=np.concatenate([model.mu[act], model.mu[act]]),
                solver=solver,
            )
            stacked = solve_contact_forces(
                ctx, config.contact_tol, config.contact_max_iter,
                warm_start=stacked if config.contact_warm_start and k else None,
            )
            lam_N, lam_T = stacked.lambda_N, stacked.lambda_T
            forces_e = ContactForces(lam_N[:m], lam_T[:m], act, stacked.iterations, stacked.residual)
            forces_j = ContactForces(lam_N[m:], lam_T[m:], act, stacked.iterations, stacked.residual)
        rhs = R_c.copy()
        rhs[:n] += ev_e.W_N @ forces_e.lambda_N + ev_e.W_T @ forces_e.lambda_T
        rhs[n:] += ev_j.W_N @ forces_j.lambda_N + ev_j.W_T @ forces_j.lambda_T
        v_c = solver(rhs)
        if not np.all(np.isfinite(v_c)):
            raise StepError("non-finite iterates in ED-alpha step")
        v_e, v_j = v_c[:n], v_c[n:]
        q_e = c[1] * q_i + c[2] * v_j + c[3] * v_e
        a_e = c[4] * v_e + c[5] * v_i + c[6] * v_j + c[7] * a_i
        q_j = c[8] * v_e + c[9] * q_i + c[10] * v_j + c[11] * v_i
        a_j = c[12] * v_j + c[13] * v_i + c[14] * a_i + c[15] * v_e
        if monitor.converged(v_e, v_prev):
            new_state = GeneralizedState(state.t + dt, q_e, v_e, v_e, a_e, a_e.copy())
            return StepReport(new_state, [forces_e, forces_j], None, k + 1, False, g_N_start)
        v_prev = v_e
        ev_e = model.evaluate(q_e, v_e)
        ev_j = model.evaluate(q_j, v_j)
    raise StepError(f"ED-alpha fixed point did not converge in {config.fp_max_iter} iterations")


def step_moreau(model: MechanicalModel, state: GeneralizedState, config: IntegratorConfig) -> StepReport:
    """One Moreau midpoint step.

    Kinematics and activity are frozen at the midpoint; a single velocity-level
    inclusion solve produces the end velocity, with Newton restitution terms
    included so that impacts need no separate correction.
    """
    dt = config.dt
    q_i, v_i = state.q, state.v_plus
    q_mid = q_i + 0.5 * dt * v_i
    ev = model.evaluate(q_mid, v_i)
    m = ev.n_contacts
    g_N_start = ev.g_N.copy()
    act = active_set(ev.g_N)
    rhs = dt * (ev.h - ev.C @ v_i - ev.K @ q_mid)
    if not np.all(np.isfinite(rhs)):
        raise StepError("non-finite right-hand side in Moreau step (explicit elastic forces diverging)")
    forces = _zero_forces(m)
    if act.size:
        WNa = ev.W_N[:, act]
        WTa = ev.W_T[:, act]
        ctx = build_context(
            WNa,
            WTa,
            ev.M,
            rhs,
            scale=1.0,
            r=config.r_impulse_value,
            active=act,
            n_contacts=m,
            mu=model.mu[act],
            v_const=v_i,
            shift_N=model.eps_N[act] * (WNa.T @ v_i),
            shift_T=model.eps_T[act] * (WTa.T @ v_i),
        )
        percussions = solve_contact_forces(ctx, config.contact_tol, config.contact_max_iter)
        forces = ContactForces(
            percussions.lambda_N / dt,
            percussions.lambda_T / dt,
            act,
            percussions.iterations,
            percussions.residual,
        )
    v_new = v_i + np.linalg.solve(
        ev.M, rhs + dt * (ev.W_N @ forces.lambda_N + ev.W_T @ forces.lambda_T)
    )
    q_new = q_mid + 0.5 * dt * v_new
    if not np.all(np.isfinite(v_new)):
        raise StepError("non-finite velocity in Moreau step")
    a_new = (v_new - v_i) / dt
    new_state = GeneralizedState(state.t + dt, q_new, v_new, v_new, a_new, a_new.copy())
    return StepReport(new_state, [forces], None, 1, False, g_N_start)


_STEPPERS = {
    "generalized_alpha": step_generalized_alpha,
    "bathe": step_bathe,
    "ed_alpha": step_ed_alpha,
    "moreau": step_moreau,
}


def mixed_step(model: MechanicalModel, state: GeneralizedState, config: IntegratorConfig) -> StepReport:
    """Base step plus automatic impulsive correction.

    After the smooth step the gaps at the new position are checked; if any
    contact closed during the step, an impulse solve over all contacts active
    at the new position corrects the velocity.  Moreau absorbs impacts in its
    own solve and passes through unchanged.
    """
    report = _STEPPERS[config.scheme](model, state, config)
    if config.scheme == "moreau" or model.n_contacts == 0:
        return report

    s = report.state
    ev_end = model.evaluate(s.q, s.v_minus)
    report.g_N_end = ev_end.g_N.copy()
    fresh = newly_closed(report.g_N_start, ev_end.g_N)
    if fresh.size == 0:
        return report

    act = active_set(ev_end.g_N)
    ctx = build_impulse_context(
        ev_end.M,
        ev_end.W_N,
        ev_end.W_T,
        s.v_minus,
        model.eps_N,
        model.eps_T,
        model.mu,
        act,
        config.r_impulse_value,
    )
    impulses = solve_impulses(ctx, config.contact_tol, config.contact_max_iter)
    v_plus = apply_impulse(
        ev_end.M, s.v_minus, ev_end.W_N, ev_end.W_T, impulses.Lambda_N, impulses.Lambda_T
    )
    report.state = replace(s, v_plus=v_plus)
    report.impulses = impulses
    report.impacted = True
    return report


def simulate(
    model: MechanicalModel,
    q0: np.ndarray,
    v0: np.ndarray,
    config: IntegratorConfig,
    t_end: float,
    recorder=None,
    initial_contact_forces: bool = True,
) -> GeneralizedState:
    """Fixed-step mixed-timestepping loop from t = 0 to t_end.

    ``recorder`` receives every :class:`StepReport`; solver failures are
    re-raised as :class:`SimulationError` carrying the failing step and time.
    Returns the final state.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    state = make_initial_state(model, q0, v0, initial_contact_forces)
    if recorder is not None and hasattr(recorder, "on_start"):
        recorder.on_start(state)
    n_steps = int(np.floor(t_end / config.dt + 1e-9))
    for i in range(n_steps):
        try:
            report = mixed_step(model, state, config)
        except (StepError, ContactSolverError) as exc:
            raise SimulationError(str(exc), i, state.t) from exc
        state = report.state
        if recorder is not None:
            recorder(report)
    return state
