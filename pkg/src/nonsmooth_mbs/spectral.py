"""Amplification matrices, spectral radii and period errors on the undamped SDOF.

Closed forms exist for the generalized-alpha and Bathe schemes; the
energy-decaying scheme has no printed matrix and is analyzed through a
numerically assembled one-step propagator.  The propagator state is
``(q, dt*v, dt^2*a)`` where the third component is the scheme's own stored
acceleration (the acceleration-like auxiliary variable for generalized-alpha).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GeneralizedState, MechanicalModel, SystemEvaluation
from .integrators import IntegratorConfig, _STEPPERS


class PeriodUndefinedError(ValueError):
    """Principal eigenvalues are real; no oscillatory period exists."""


def amplification_galpha(Omega, alpha_m, alpha_f, gamma, beta) -> np.ndarray:
    """One-step propagator of the generalized-alpha method on the SDOF."""
    O2 = Omega * Omega
    D = 1.0 - alpha_m + (1.0 - alpha_f) * beta * O2
    if D == 0.0:
        raise ZeroDivisionError("degenerate parameter combination: D = 0")
    am, af, g, b = alpha_m, alpha_f, gamma, beta
    A = np.array(
        [
            [
                1.0 - am - af * b * O2,
                1.0 - am,
                (0.5 - b) * (1.0 - am) - b * am,
            ],
            [
                -g * O2,
                1.0 - am - (1.0 - af) * (g - b) * O2,
                (1.0 - g) * (1.0 - am) - g * am - (1.0 - af) * (0.5 * g - b) * O2,
            ],
            [
                -O2,
                -(1.0 - af) * O2,
                -(1.0 - af) * (0.5 - b) * O2 - am,
            ],
        ]
    )
    return A / D


def amplification_bathe(Omega) -> np.ndarray:
    """One-step propagator of the Bathe method on the SDOF.

    Rows are ordered (q, dt*v, dt^2*a); D = (16 + Omega^2)(9 + Omega^2) > 0, so
    the matrix exists for every step size.
    """
    O2 = Omega * Omega
    O4 = O2 * O2
    D = (16.0 + O2) * (9.0 + O2)
    A = np.array(
        [
            [144.0 - 19.0 * O2, 144.0 - 5.0 * O2, 28.0],
            [-96.0 * O2 + O4, 144.0 - 47.0 * O2, 48.0 - 4.0 * O2],
            [-144.0 * O2 + 19.0 * O4, -144.0 * O2 + 5.0 * O4, -28.0 * O2],
        ]
    )
    return A / D


class ScalarLinearModel(MechanicalModel):
    """Undamped SDOF oscillator q'' + omega^2 q = 0 (unit mass, no contacts)."""

    def __init__(self, omega: float, mass: float = 1.0):
        self.omega = omega
        self.mass = mass
        self.n_dof = 1
        self.n_contacts = 0
        self.eps_N = np.zeros(0)
        self.eps_T = np.zeros(0)
        self.mu = np.zeros(0)
        self.dof_names = ["x"]
        self._M = np.array([[mass]])
        self._K = np.array([[mass * omega * omega]])
        self._Z = np.zeros((1, 1))
        self._W = np.zeros((1, 0))
        self._g = np.zeros(0)

    def evaluate(self, q, v) -> SystemEvaluation:
        return SystemEvaluation(
            self._M, self._Z, self._K, np.zeros(1), self._W, self._W, self._g, self._g,
            validate=False,
        )

    def potential_energy(self, q) -> float:
        return 0.5 * float(q @ self._K @ q)


def numerical_amplification(scheme: str, Omega: float, config_kwargs: dict | None = None) -> np.ndarray:
    """Propagator assembled column-by-column from one integrator step.

    Columns are the images of the unit basis states.  Moreau carries no
    acceleration state, so its matrix is 2x2 over ``(q, dt*v)``.
    """
    kwargs = dict(config_kwargs or {})
    dt = Omega  # omega = 1, so Omega = dt
    kwargs["scheme"] = scheme
    kwargs["dt"] = dt
    config = IntegratorConfig(**kwargs)
    model = ScalarLinearModel(omega=1.0)
    stepper = _STEPPERS[scheme]
    dim = 2 if scheme == "moreau" else 3
    A = np.zeros((dim, dim))
    for j in range(dim):
        X = np.zeros(dim)
        X[j] = 1.0
        q0 = np.array([X[0]])
        v0 = np.array([X[1] / dt])
        if dim == 3:
            stored = np.array([X[2] / dt**2])
        else:
            stored = np.zeros(1)
        if scheme == "generalized_alpha":
            # third state component is the auxiliary variable; the true
            # acceleration satisfies the equilibrium at t_i
            a0 = np.array([-(model.omega**2) * q0[0]])
            state = GeneralizedState(0.0, q0, v0, v0, a0, stored)
        else:
            state = GeneralizedState(0.0, q0, v0, v0, stored, stored.copy())
        report = stepper(model, state, config)
        s = report.state
        A[0, j] = s.q[0]
        A[1, j] = dt * s.v_minus[0]
        if dim == 3:
            third = s.aux if scheme == "generalized_alpha" else s.a
            A[2, j] = dt**2 * third[0]
    return A


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def period_error(A: np.ndarray, Omega: float) -> float:
    """Relative period elongation from the principal complex eigenvalue pair.

    Raises :class:`PeriodUndefinedError` in the overdamped/annihilated regime
    where all eigenvalues are real.
    """
    lams = np.linalg.eigvals(A)
    mags = np.abs(lams)
    complex_mask = np.abs(lams.imag) > 1e-12 * np.maximum(mags, 1e-300)
    if not np.any(complex_mask):
        raise PeriodUndefinedError("no oscillatory principal roots at this step size")
    lam = lams[complex_mask][np.argmax(mags[complex_mask])]
    phi = abs(np.angle(lam))
    return Omega / phi - 1.0


def high_frequency_radius(alpha_m: float, alpha_f: float, gamma: float, beta: float) -> float:
    """Spectral radius of the generalized-alpha propagator in the Omega -> inf limit.

    Uses the closed-form limit eigenvalues.  For the optimal parameter family
    all three coincide, making finite-Omega eigenvalue computations ill
    conditioned (the splitting decays like Omega^(-2/3)); this limit value is
    the well-posed quantity to compare against the prescribed rho_inf.
    """
    disc = 16.0 * beta - (2.0 * gamma + 1.0) ** 2
    sq = np.sqrt(complex(disc))
    lam12 = max(
        abs((4.0 * beta - (2.0 * gamma + 1.0) + s * 1j * sq) / (4.0 * beta)) for s in (1.0, -1.0)
    )
    lam3 = abs(alpha_f / (alpha_f - 1.0)) if alpha_f != 1.0 else np.inf
    return float(max(lam12, lam3))


def high_frequency_radius_bathe() -> float:
    """Bathe limit radius; the limit propagator is strictly lower triangular
    (nilpotent), so the radius is exactly zero."""
    A_inf = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [19.0, 5.0, 0.0]])
    return spectral_radius(A_inf)


@dataclass
class StabilityReport:
    stable: bool
    cusp_expected: bool
    lam_inf_principal: float
    lam_inf_third: float
    conditions: dict = field(default_factory=dict)


def stability_check(alpha_m: float, alpha_f: float, beta: float) -> StabilityReport:
    """Unconditional-stability conditions and the high-frequency cusp diagnostic.

    The second-order value gamma = 1/2 - alpha_m + alpha_f is assumed.  A cusp
    in the spectral-radius plot is expected when the spurious high-frequency
    root exceeds the principal pair in modulus.
    """
    gamma = 0.5 - alpha_m + alpha_f
    cond1 = alpha_m <= alpha_f <= 0.5
    cond2 = beta >= 0.25 + 0.5 * (alpha_f - alpha_m)
    disc = 16.0 * beta - (2.0 * gamma + 1.0) ** 2
    sq = np.sqrt(complex(disc))  # imaginary for disc < 0 -> real principal roots
    roots = [
        (4.0 * beta - (2.0 * gamma + 1.0) + s * 1j * sq) / (4.0 * beta) for s in (+1.0, -1.0)
    ]
    lam12 = float(max(abs(r) for r in roots))
    lam3 = abs(alpha_f / (alpha_f - 1.0)) if alpha_f != 1.0 else np.inf
    return StabilityReport(
        stable=bool(cond1 and cond2),
        cusp_expected=bool(lam3 > lam12 + 1e-14),
        lam_inf_principal=float(lam12),
        lam_inf_third=float(lam3),
        conditions={"alpha_ordering": bool(cond1), "beta_bound": bool(cond2)},
    )


@dataclass
class SpectralSweep:
    """Spectral radius and period error over a logarithmic step-size grid.

    ``period_error`` holds ``nan`` where the principal roots are real and no
    period is defined; CSV emission leaves those cells empty.
    """

    scheme: str
    parameters: dict
    dt_over_T: np.ndarray
    omegas: np.ndarray
    rho: np.ndarray
    period_error: np.ndarray


def sweep(
    scheme: str,
    rho_inf: float | None = None,
    parameters: dict | None = None,
    n_points: int = 400,
    dt_over_T_min: float = 1e-3,
    dt_over_T_max: float = 1e2,
    numerical: bool = False,
) -> SpectralSweep:
    """Sweep the one-step propagator over Delta t / T.

    ``parameters`` may override individual scheme parameters (alpha_m, alpha_f,
    gamma, beta for generalized-alpha; alpha, alpha_AR for the energy-decaying
    scheme).  Schemes without a closed-form matrix always use the numerical
    propagator.
    """
    params = dict(parameters or {})
    ratios = np.logspace(np.log10(dt_over_T_min), np.log10(dt_over_T_max), n_points)
    omegas = 2.0 * np.pi * ratios
    rho = np.empty(n_points)
    perr = np.full(n_points, np.nan)
    if scheme == "generalized_alpha" and not numerical:
        am, af, g, b = galpha_resolved(rho_inf, params)
        mats = [amplification_galpha(O, am, af, g, b) for O in omegas]
        used = {"alpha_m": am, "alpha_f": af, "gamma": g, "beta": b, "rho_inf": rho_inf}
    elif scheme == "bathe" and not numerical:
        mats = [amplification_bathe(O) for O in omegas]
        used = {}
    else:
        cfg = dict(params)
        if rho_inf is not None:
            cfg["rho_inf"] = rho_inf
        mats = [numerical_amplification(scheme, O, cfg) for O in omegas]
        used = dict(cfg)
    for i, (O, A) in enumerate(zip(omegas, mats)):
        rho[i] = spectral_radius(A)
        try:
            perr[i] = period_error(A, O)
        except PeriodUndefinedError:
            pass
    return SpectralSweep(scheme, used, ratios, omegas, rho, perr)


def galpha_resolved(rho_inf: float | None, overrides: dict) -> tuple[float, float, float, float]:
    from .integrators import galpha_params

    am, af, g, b = galpha_params(0.8 if rho_inf is None else rho_inf)
    am = overrides.get("alpha_m", am)
    af = overrides.get("alpha_f", af)
    g = overrides.get("gamma", g)
    b = overrides.get("beta", b)
    return am, af, g, b
