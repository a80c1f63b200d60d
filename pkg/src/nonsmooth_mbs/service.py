"""HTTP service exposing simulations, spectral sweeps, convergence studies and
modal analysis.

The service wraps the library for multi-client use (parameter sweeps, remote
runs); the bundled CLI talks to it either in-process or over the network.
Simulation divergence is a legitimate computational outcome and is reported in
the response body, not as a transport error."""

from __future__ import annotations

import io

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .core import ModelError
from .fem_beam import BOUNDARY_CONDITIONS, FloatingFrameSliderCrank
from .integrators import SCHEMES, IntegratorConfig, SimulationError
from .modal import model_modes
from .recording import ChannelError
from .scenarios import (
    SCENARIOS,
    ScenarioConfig,
    _slider_params,
    convergence_study,
)
from .spectral import sweep

app = FastAPI(
    title="nonsmooth-mbs",
    version=__version__,
    description="Mixed timestepping for nonsmooth flexible multibody systems",
)


class IntegratorSpec(BaseModel):
    scheme: str = "bathe"
    dt: float = Field(1e-5, gt=0)
    rho_inf: float = Field(0.8, ge=0, le=1)
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
    r_impulse: float | None = None

    def to_config(self) -> IntegratorConfig:
        if self.scheme not in SCHEMES:
            raise HTTPException(422, f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        return IntegratorConfig(**self.model_dump())


class SimulateRequest(BaseModel):
    scenario: str
    integrator: IntegratorSpec = IntegratorSpec()
    t_end: float = Field(0.05, gt=0)
    channels: list[str] | None = None
    model_overrides: dict = Field(default_factory=dict)


class SimulateResponse(BaseModel):
    scenario: str
    n_steps: int
    n_impacts: int
    final_time: float
    completed: bool
    failure: str | None = None
    failed_step: int | None = None
    failed_time: float | None = None
    csv: str


class SpectralRequest(BaseModel):
    scheme: str = "generalized_alpha"
    rho_inf: float = Field(0.8, ge=0, le=1)
    parameters: dict = Field(default_factory=dict)
    n_points: int = Field(400, ge=2, le=20000)
    dt_over_T_min: float = Field(1e-3, gt=0)
    dt_over_T_max: float = Field(1e2, gt=0)
    numerical: bool = False


class SpectralResponse(BaseModel):
    scheme: str
    parameters: dict
    csv: str


class ConvergeRequest(BaseModel):
    scenario: str
    integrator: IntegratorSpec = IntegratorSpec(dt=1e-4)
    dts: list[float]
    channel: str = "q_theta2"
    t_end: float = Field(0.05, gt=0)
    model_overrides: dict = Field(default_factory=dict)


class ConvergeResponse(BaseModel):
    scenario: str
    channel: str
    dts: list[float]
    errors: list[float]
    slope: float
    monotone: bool
    csv: str


class ModesRequest(BaseModel):
    table: str = "table1"
    n_elements: int = Field(20, ge=1, le=200)
    bc: str = "tangential_clamped_free"
    n_modes: int | None = None
    model_overrides: dict = Field(default_factory=dict)


class ModesResponse(BaseModel):
    bc: str
    n_elastic: int
    frequencies_hz: list[float]
    csv: str


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/scenarios")
def scenarios():
    return {"scenarios": list(SCENARIOS)}


@app.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(req: SimulateRequest):
    if req.scenario not in SCENARIOS:
        raise HTTPException(404, f"unknown scenario {req.scenario!r}")
    config = ScenarioConfig(
        req.scenario, req.integrator.to_config(), req.t_end, model_overrides=req.model_overrides
    )
    try:
        model = config.build_model()
    except (ModelError, TypeError) as exc:
        raise HTTPException(422, str(exc)) from exc
    from .integrators import simulate as run_sim
    from .recording import TrajectoryRecorder

    q0, v0 = config.initial_conditions(model)
    rec = TrajectoryRecorder(model)
    failure = failed_step = failed_time = None
    try:
        run_sim(model, q0, v0, config.integrator, req.t_end, recorder=rec)
    except SimulationError as exc:
        failure, failed_step, failed_time = str(exc), exc.step, exc.t
    try:
        csv = rec.to_csv(req.channels)
    except ChannelError as exc:
        raise HTTPException(422, str(exc)) from exc
    return SimulateResponse(
        scenario=req.scenario,
        n_steps=rec.reports_seen,
        n_impacts=int(rec.impacted.sum()),
        final_time=float(rec.t[-1]) if len(rec.t) else 0.0,
        completed=failure is None,
        failure=failure,
        failed_step=failed_step,
        failed_time=failed_time,
        csv=csv,
    )


@app.post("/spectral", response_model=SpectralResponse)
def spectral_endpoint(req: SpectralRequest):
    if req.scheme not in SCHEMES:
        raise HTTPException(422, f"unknown scheme {req.scheme!r}")
    sw = sweep(
        req.scheme,
        rho_inf=req.rho_inf,
        parameters=req.parameters,
        n_points=req.n_points,
        dt_over_T_min=req.dt_over_T_min,
        dt_over_T_max=req.dt_over_T_max,
        numerical=req.numerical,
    )
    buf = io.StringIO()
    buf.write("dt_over_T,rho,period_error\n")
    for x, r, pe in zip(sw.dt_over_T, sw.rho, sw.period_error):
        pe_txt = "" if np.isnan(pe) else "%.17g" % pe
        buf.write("%.17g,%.17g,%s\n" % (x, r, pe_txt))
    params = {k: v for k, v in sw.parameters.items() if v is not None}
    return SpectralResponse(scheme=req.scheme, parameters=params, csv=buf.getvalue())


@app.post("/converge", response_model=ConvergeResponse)
def converge_endpoint(req: ConvergeRequest):
    if req.scenario not in SCENARIOS:
        raise HTTPException(404, f"unknown scenario {req.scenario!r}")
    if len(req.dts) < 3:
        raise HTTPException(422, "need at least three step sizes")
    config = ScenarioConfig(
        req.scenario, req.integrator.to_config(), req.t_end, model_overrides=req.model_overrides
    )
    try:
        report = convergence_study(config, req.dts, req.channel)
    except SimulationError as exc:
        raise HTTPException(409, f"solver failure during study: {exc}") from exc
    except (ChannelError, ValueError, ModelError) as exc:
        raise HTTPException(422, str(exc)) from exc
    buf = io.StringIO()
    buf.write("dt,error\n")
    for dt, err in zip(report.dts, report.errors):
        buf.write("%.17g,%.17g\n" % (dt, err))
    return ConvergeResponse(
        scenario=req.scenario,
        channel=req.channel,
        dts=[float(x) for x in report.dts],
        errors=[float(x) for x in report.errors],
        slope=report.slope,
        monotone=report.monotone,
        csv=buf.getvalue(),
    )


@app.post("/modes", response_model=ModesResponse)
def modes_endpoint(req: ModesRequest):
    if req.bc not in BOUNDARY_CONDITIONS:
        raise HTTPException(422, f"unknown boundary condition {req.bc!r}")
    overrides = dict(req.model_overrides)
    overrides["n_elements"] = req.n_elements
    overrides["bc"] = req.bc
    try:
        params = _slider_params(req.table if req.table in ("table1", "table2") else "table1", overrides)
        model = FloatingFrameSliderCrank(params)
        basis = model_modes(model, req.n_modes)
    except ModelError as exc:
        raise HTTPException(422, str(exc)) from exc
    buf = io.StringIO()
    buf.write("mode,frequency_hz\n")
    for k, f in enumerate(basis.frequencies_hz, start=1):
        buf.write("%d,%.17g\n" % (k, f))
    return ModesResponse(
        bc=req.bc,
        n_elastic=model.n_elastic,
        frequencies_hz=[float(f) for f in basis.frequencies_hz],
        csv=buf.getvalue(),
    )
