"""Scenario definitions, error metrics and convergence studies.

The mass-spring model problem isolates integrator behavior on a linear system
with one very stiff mode (variant ``a``) or a velocity-level bilateral
constraint (variant ``b``, posed as two opposed unilateral rows so the contact
solver covers it).  Slider-crank scenarios mirror the two published parameter
tables, plus a bilateral variant with zero clearance used for convergence
studies and a rigid 3-DOF reference.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MechanicalModel, ModelError, SystemEvaluation
from .fem_beam import FloatingFrameSliderCrank, RigidSliderCrank, SliderCrankParams
from .integrators import IntegratorConfig, simulate
from .recording import TrajectoryRecorder
from .spectral import ScalarLinearModel

THREADS_ENV = "NONSMOOTH_MBS_THREADS"


class MassSpringModel(MechanicalModel):
    """Three masses in a chain under gravity.

    Variant ``stiff_spring``: mass 3 is tied to ground through a spring of
    stiffness k0 = 1e7 N/m, producing one ~503 Hz mode next to the ~Hz chain
    modes.  Variant ``bilateral``: the stiff spring is replaced by a bilateral
    constraint on mass 3, posed as a pair of opposed unilateral contacts that
    are closed from the start.
    """

    def __init__(self, variant: str = "stiff_spring", k0: float = 1.0e7):
        if variant not in ("stiff_spring", "bilateral"):
            raise ModelError(f"unknown model-problem variant {variant!r}")
        self.variant = variant
        k1 = k2 = k3 = 1.0
        self.masses = np.ones(3)
        self.gamma = 9.81
        self.n_dof = 3
        self.dof_names = ["x1", "x2", "x3"]
        K = np.array(
            [[k1 + k2, -k2, 0.0], [-k2, k2 + k3, -k3], [0.0, -k3, k3]]
        )
        if variant == "stiff_spring":
            K[2, 2] += k0
            self.n_contacts = 0
            self._W = np.zeros((3, 0))
        else:
            self.n_contacts = 2
            W = np.zeros((3, 2))
            W[2, 0] = -1.0  # gap -x3: pushes mass 3 downward
            W[2, 1] = 1.0  # gap +x3: pushes mass 3 upward
            self._W = W
        self._K = K
        self._M = np.diag(self.masses)
        self._Z = np.zeros((3, 3))
        self._h = self.masses * self.gamma
        self._WT = np.zeros((3, self.n_contacts))
        self.eps_N = np.zeros(self.n_contacts)
        self.eps_T = np.zeros(self.n_contacts)
        self.mu = np.zeros(self.n_contacts)

    def evaluate(self, q, v) -> SystemEvaluation:
        if self.n_contacts:
            g_N = np.array([-q[2], q[2]])
        else:
            g_N = np.zeros(0)
        g_T = np.zeros(self.n_contacts)
        return SystemEvaluation(
            self._M, self._Z, self._K, self._h, self._W, self._WT, g_N, g_T
        )

    def potential_energy(self, q) -> float:
        return float(0.5 * q @ self._K @ q - self._h @ q)

    def eigen_solution(self):
        """Frequencies and mass-normalized modes of the unconstrained variant."""
        from scipy.linalg import eigh

        w2, Phi = eigh(self._K, self._M)
        return np.sqrt(np.maximum(w2, 0.0)), Phi

    def static_equilibrium(self) -> np.ndarray:
        if self.variant == "bilateral":
            # mass 3 held at zero; solve the remaining 2x2 chain
            K = self._K.copy()
            q = np.zeros(3)
            q[:2] = np.linalg.solve(K[:2, :2], self._h[:2])
            return q
        return np.linalg.solve(self._K, self._h)

    def analytic_solution(self, q0: np.ndarray, v0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Exact modal solution of the unconstrained linear system under the
        constant gravity load (variant ``a`` only)."""
        if self.variant != "stiff_spring":
            raise ModelError("closed-form modal solution applies to the stiff-spring variant")
        omegas, Phi = self.eigen_solution()
        q_st = self.static_equilibrium()
        eta0 = Phi.T @ self._M @ (np.asarray(q0) - q_st)
        etad0 = Phi.T @ self._M @ np.asarray(v0)
        out = np.empty((times.size, 3))
        for i, t in enumerate(times):
            eta = eta0 * np.cos(omegas * t) + np.where(
                omegas > 0, etad0 * np.sin(omegas * t) / np.where(omegas > 0, omegas, 1.0), etad0 * t
            )
            out[i] = q_st + Phi @ eta
        return out


def mass_spring_model(variant: str) -> MassSpringModel:
    """Model-problem factory; variant in {'stiff_spring', 'bilateral'}."""
    return MassSpringModel(variant)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one run: model, integrator, horizon, outputs."""

    name: str
    integrator: IntegratorConfig
    t_end: float
    channels: list[str] = field(default_factory=lambda: ["t"])
    model_overrides: dict = field(default_factory=dict)
    output_path: str | None = None
    reference: dict | None = None

    def build_model(self) -> MechanicalModel:
        return build_scenario_model(self.name, self.model_overrides)

    def initial_conditions(self, model) -> tuple[np.ndarray, np.ndarray]:
        return scenario_initial_conditions(self.name, model)


SCENARIOS = (
    "mass_spring_a",
    "mass_spring_b",
    "slider_crank_t1",
    "slider_crank_t2",
    "slider_crank_bilateral",
    "slider_crank_bilateral_rigid",
    "slider_crank_rigid",
    "sdof",
)

_SLIDER_FIELDS = {f for f in SliderCrankParams.__dataclass_fields__}


def _slider_params(table: str, overrides: dict) -> SliderCrankParams:
    unknown = set(overrides) - _SLIDER_FIELDS
    if unknown:
        raise ModelError(f"unknown slider-crank override keys: {sorted(unknown)}")
    if table == "table2":
        return SliderCrankParams.table2(**overrides)
    return SliderCrankParams.table1(**overrides)


def build_scenario_model(name: str, overrides: dict | None = None) -> MechanicalModel:
    overrides = dict(overrides or {})
    if name == "mass_spring_a":
        return MassSpringModel("stiff_spring", **overrides)
    if name == "mass_spring_b":
        return MassSpringModel("bilateral", **overrides)
    if name == "slider_crank_t1":
        return FloatingFrameSliderCrank(_slider_params("table1", overrides))
    if name == "slider_crank_t2":
        return FloatingFrameSliderCrank(_slider_params("table2", overrides))
    if name in ("slider_crank_bilateral", "slider_crank_bilateral_rigid"):
        # ideal revolute-in-slot joint: zero clearance, no restitution, no
        # friction (a frictional force on the statically indeterminate corner
        # split would make the trajectory discretization-dependent)
        overrides.setdefault("c", 0.0)
        overrides.setdefault("eps_N", (0.0, 0.0, 0.0, 0.0))
        overrides.setdefault("mu", (0.0, 0.0, 0.0, 0.0))
        params = _slider_params("table1", overrides)
        if name.endswith("rigid"):
            return RigidSliderCrank(params)
        return FloatingFrameSliderCrank(params)
    if name == "slider_crank_rigid":
        return RigidSliderCrank(_slider_params("table1", overrides))
    if name == "sdof":
        return ScalarLinearModel(omega=overrides.pop("omega", 2.0 * np.pi))
    raise ModelError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


def scenario_initial_conditions(name: str, model) -> tuple[np.ndarray, np.ndarray]:
    if name.startswith("mass_spring"):
        return np.zeros(3), np.zeros(3)
    if name == "sdof":
        return np.array([1.0]), np.zeros(1)
    p = model.params
    q0 = np.zeros(model.n_dof)
    v0 = np.zeros(model.n_dof)
    v0[:3] = [p.omega1_0, p.omega2_0, p.omega3_0]
    return q0, v0


def slider_crank_scenario(
    table: str = "table1",
    integrator: IntegratorConfig | None = None,
    t_end: float = 0.05,
    **overrides,
) -> ScenarioConfig:
    """Fully populated slider-crank scenario with the published defaults.

    ``table`` in {'table1', 'table2', 'bilateral'}; overrides address the
    parameter fields by their table names (l1, l2, a, b, c, m1.., eps_N, mu,
    omega1_0, E, rho, torque).
    """
    name = {
        "table1": "slider_crank_t1",
        "table2": "slider_crank_t2",
        "bilateral": "slider_crank_bilateral",
        "rigid": "slider_crank_rigid",
    }[table]
    cfg = integrator or IntegratorConfig(scheme="bathe", dt=1e-5)
    channels = ["t", "q_theta1", "q_theta2", "q_theta3", "v_theta1", "v_theta2"]
    channels += [f"gN_{k}" for k in (1, 2, 3, 4)]
    channels += [f"lamN_{k}" for k in (1, 2, 3, 4)]
    return ScenarioConfig(name, cfg, t_end, channels, dict(overrides))


def run_scenario(config: ScenarioConfig, initial_contact_forces: bool = True) -> TrajectoryRecorder:
    model = config.build_model()
    q0, v0 = config.initial_conditions(model)
    rec = TrajectoryRecorder(model)
    simulate(
        model,
        q0,
        v0,
        config.integrator,
        config.t_end,
        recorder=rec,
        initial_contact_forces=initial_contact_forces,
    )
    return rec


@dataclass
class ErrorReport:
    dts: np.ndarray
    errors: np.ndarray
    slope: float
    channel: str
    skipped_samples: int = 0
    monotone: bool = True


def default_sample_times(t_end: float, coarsest_dt: float, t_skip: float = 1e-3) -> np.ndarray:
    """Sample grid for error norms: multiples of the coarsest step, spaced at
    least 1e-3 s apart, excluding the startup interval t < 1e-3 s."""
    spacing = coarsest_dt * max(1, int(np.ceil(1e-3 / coarsest_dt)))
    times = np.arange(spacing, t_end + 0.5 * spacing, spacing)
    times = times[(times >= t_skip - 1e-15) & (times <= t_end + 1e-12)]
    if times.size == 0:
        raise ValueError("empty sample set; t_end too short for the sample spacing")
    return times


def relative_error(
    run: TrajectoryRecorder,
    reference: TrajectoryRecorder,
    channel: str,
    sample_times: np.ndarray,
    floor: float = 1e-14,
) -> tuple[float, int]:
    """2-norm of pointwise relative deviations at the sample times.

    Samples where the reference magnitude is below ``floor`` times the channel
    scale are skipped and counted."""
    y = run.sample(channel, sample_times)
    y_ref = reference.sample(channel, sample_times)
    scale = np.max(np.abs(y_ref))
    if scale == 0.0:
        raise ValueError(f"reference channel {channel!r} is identically zero at the samples")
    usable = np.abs(y_ref) > floor * scale
    skipped = int(np.sum(~usable))
    if not np.any(usable):
        raise ValueError("no usable samples: reference vanishes everywhere")
    rel = np.abs(y[usable] - y_ref[usable]) / np.abs(y_ref[usable])
    return float(np.linalg.norm(rel)), skipped


def _positive_slope(dts, errors) -> float:
    logd = np.log(np.asarray(dts, dtype=float))
    loge = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    A = np.vstack([logd, np.ones_like(logd)]).T
    coef, *_ = np.linalg.lstsq(A, loge, rcond=None)
    return float(coef[0])


def _max_workers(n_jobs: int) -> int:
    cap = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, min(cap, n_jobs))


def convergence_study(
    config: ScenarioConfig,
    dts: list[float],
    channel: str,
    reference_refinement: int = 4,
) -> ErrorReport:
    """Self-referenced convergence study over a step-size grid.

    The reference run uses the same scheme at the finest step divided by
    ``reference_refinement``; errors are sampled on a grid commensurate with
    the coarsest step.  Requires at least three step sizes.
    """
    dts = sorted(dts, reverse=True)
    if len(dts) < 3:
        raise ValueError("need at least three step sizes for a slope")
    sample_times = default_sample_times(config.t_end, dts[0])

    def run_at(dt: float) -> TrajectoryRecorder:
        return run_scenario(replace(config, integrator=replace(config.integrator, dt=dt)))

    jobs = list(dts) + [dts[-1] / reference_refinement]
    workers = _max_workers(len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run_at, jobs))
    else:
        runs = [run_at(dt) for dt in jobs]
    reference = runs[-1]
    errors = []
    skipped = 0
    for rec in runs[:-1]:
        err, sk = relative_error(rec, reference, channel, sample_times)
        errors.append(err)
        skipped += sk
    errors = np.array(errors)
    monotone = bool(np.all(np.diff(errors) < 0))
    return ErrorReport(
        np.array(dts), errors, _positive_slope(dts, errors), channel, skipped, monotone
    )


def energy_diagnostics(recorder: TrajectoryRecorder) -> dict[str, np.ndarray]:
    """Kinetic, elastic, potential and total energy time series."""
    energies = recorder.energies()
    energies["elastic"] = recorder.elastic_energy()
    return energies
