"""Core state types and the mechanical-model contract.

A model supplies mass/damping/stiffness operators, the combined external and
quadratic-velocity force vector, normal/tangential gap functions and their
generalized force directions.  Integrators and contact solvers consume models
exclusively through this interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_RTOL = 1e-10


class ModelError(ValueError):
    """Raised for inconsistent model data (dimensions, symmetry, definiteness)."""


@dataclass
class GeneralizedState:
    """Kinematic state at one time instant.

    ``v_minus`` is the velocity produced by the smooth base integrator,
    ``v_plus`` the velocity after a possible impulsive correction.  At steps
    without newly closed contacts both are the same object.  ``aux`` is the
    acceleration-like auxiliary variable of the generalized-alpha recurrence;
    the other schemes keep ``aux = a``.
    """

    t: float
    q: np.ndarray
    v_minus: np.ndarray
    v_plus: np.ndarray
    a: np.ndarray
    aux: np.ndarray

    def __post_init__(self):
        n = self.q.shape[0]
        for name in ("v_minus", "v_plus", "a", "aux"):
            if getattr(self, name).shape != (n,):
                raise ModelError(f"state field {name} has wrong length")

    @property
    def n_dof(self) -> int:
        return self.q.shape[0]


@dataclass
class SystemEvaluation:
    """Model operators evaluated at one kinematic state.

    ``W_N``/``W_T`` are (n_dof, n_contacts) matrices of generalized force
    directions, one column per contact; ``g_N``/``g_T`` the matching gaps.
    """

    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    h: np.ndarray
    W_N: np.ndarray
    W_T: np.ndarray
    g_N: np.ndarray
    g_T: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        n = self.M.shape[0]
        if self.M.shape != (n, n) or self.C.shape != (n, n) or self.K.shape != (n, n):
            raise ModelError("M, C, K must be square and of equal size")
        if self.h.shape != (n,):
            raise ModelError("h has wrong length")
        m = self.g_N.shape[0]
        if self.W_N.shape != (n, m) or self.g_T.shape != (m,) or self.W_T.shape != (n, m):
            raise ModelError("contact data shapes inconsistent with g_N")
        if self.validate:
            scale = max(np.abs(self.M).max(), 1e-300)
            if np.abs(self.M - self.M.T).max() > SYMMETRY_RTOL * scale:
                raise ModelError("mass matrix asymmetry exceeds tolerance")
            try:
                np.linalg.cholesky(self.M)
            except np.linalg.LinAlgError:
                raise ModelError("mass matrix not positive definite") from None

    @property
    def n_dof(self) -> int:
        return self.M.shape[0]

    @property
    def n_contacts(self) -> int:
        return self.g_N.shape[0]


class MechanicalModel:
    """Abstract contract every simulated system implements.

    Subclasses must set ``n_dof``, ``n_contacts`` and the per-contact
    parameter arrays ``eps_N``, ``eps_T`` (restitution, in [0, 1]) and ``mu``
    (constant friction coefficients, >= 0), and implement :meth:`evaluate`.
    ``evaluate`` must be a pure function of ``(q, v)``; models are immutable
    after construction and safe to share across threads.
    """

    n_dof: int
    n_contacts: int
    eps_N: np.ndarray
    eps_T: np.ndarray
    mu: np.ndarray
    dof_names: list[str]

    def evaluate(self, q: np.ndarray, v: np.ndarray) -> SystemEvaluation:
        raise NotImplementedError

    def potential_energy(self, q: np.ndarray) -> float:
        """Total potential (gravity plus elastic) for energy diagnostics."""
        raise NotImplementedError

    def _check_contact_params(self):
        for name in ("eps_N", "eps_T"):
            e = getattr(self, name)
            if e.shape != (self.n_contacts,) or np.any(e < 0) or np.any(e > 1):
                raise ModelError(f"{name} must lie in [0, 1] per contact")
        if self.mu.shape != (self.n_contacts,) or np.any(self.mu < 0):
            raise ModelError("mu must be nonnegative per contact")


def active_set(g_N: np.ndarray) -> np.ndarray:
    """Indices of closed contacts; a gap exactly on the boundary counts as closed."""
    return np.flatnonzero(np.asarray(g_N) <= 0.0)


def newly_closed(g_N_prev: np.ndarray, g_N_next: np.ndarray) -> np.ndarray:
    """Contacts open at the previous state and closed at the next one."""
    g_N_prev = np.asarray(g_N_prev)
    g_N_next = np.asarray(g_N_next)
    if g_N_prev.shape != g_N_next.shape:
        raise ModelError("gap vectors of unequal length")
    return np.flatnonzero((g_N_prev > 0.0) & (g_N_next <= 0.0))


def initial_acceleration(
    model: MechanicalModel,
    q0: np.ndarray,
    v0: np.ndarray,
    include_contact_forces: bool = True,
    r: float = 0.1,
) -> np.ndarray:
    """Consistent acceleration at the initial time.

    Solves ``M a0 = h0 - K0 q0 - C0 v0``.  When contacts are already closed at
    the initial state and ``include_contact_forces`` is set, an
    acceleration-level contact solve adds the active constraint forces to the
    right-hand side so that simulations may start from persistent contact.
    """
    ev = model.evaluate(q0, v0)
    rhs = ev.h - ev.K @ q0 - ev.C @ v0
    if include_contact_forces and ev.n_contacts:
        act = active_set(ev.g_N)
        if act.size:
            from .contact import build_context, solve_contact_forces

            ctx = build_context(
                ev.W_N[:, act],
                ev.W_T[:, act],
                ev.M,
                rhs,
                scale=1.0,
                r=r,
                active=act,
                n_contacts=ev.n_contacts,
                mu=model.mu[act],
            )
            forces = solve_contact_forces(ctx)
            rhs = rhs + ev.W_N @ forces.lambda_N + ev.W_T @ forces.lambda_T
    try:
        return np.linalg.solve(ev.M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelError("singular mass matrix at initial state") from exc


def make_initial_state(
    model: MechanicalModel,
    q0: np.ndarray,
    v0: np.ndarray,
    include_contact_forces: bool = True,
) -> GeneralizedState:
    """Initial state with consistent acceleration and auxiliary variable."""
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    a0 = initial_acceleration(model, q0, v0, include_contact_forces)
    return GeneralizedState(t=0.0, q=q0, v_minus=v0.copy(), v_plus=v0.copy(), a=a0, aux=a0.copy())
