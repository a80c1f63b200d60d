"""Trajectory recording, output channels and CSV emission.

Recorders accumulate the per-step reports of a simulation; named channels
(state components, gaps, multipliers, energies) are derived lazily.  CSV
serialization uses 17 significant digits so that re-reading a file reproduces
the recorded doubles bit-exactly.
"""

from __future__ import annotations

import io

import numpy as np

from .core import GeneralizedState, MechanicalModel
from .integrators import StepReport

_FLOAT_FMT = "%.17g"


class ChannelError(KeyError):
    """Unknown output channel name."""


class TrajectoryRecorder:
    """Accumulates states and contact quantities step by step.

    The initial state occupies row 0; every mixed step appends one row.
    Multipliers at row 0 are zero (no solve has happened yet); for schemes
    with two solve points per step the end-point forces are recorded.
    """

    def __init__(self, model: MechanicalModel):
        self.model = model
        self._t: list[float] = []
        self._q: list[np.ndarray] = []
        self._v_minus: list[np.ndarray] = []
        self._v_plus: list[np.ndarray] = []
        self._a: list[np.ndarray] = []
        self._lam_N: list[np.ndarray] = []
        self._lam_T: list[np.ndarray] = []
        self._Lam_N: list[np.ndarray] = []
        self._Lam_T: list[np.ndarray] = []
        self._impacted: list[bool] = []
        self._fp_iterations: list[int] = []
        self.reports_seen = 0

    def on_start(self, state: GeneralizedState):
        self._append_state(state)
        m = self.model.n_contacts
        self._lam_N.append(np.zeros(m))
        self._lam_T.append(np.zeros(m))
        self._Lam_N.append(np.zeros(m))
        self._Lam_T.append(np.zeros(m))
        self._impacted.append(False)
        self._fp_iterations.append(0)

    def _append_state(self, state: GeneralizedState):
        self._t.append(state.t)
        self._q.append(state.q)
        self._v_minus.append(state.v_minus)
        self._v_plus.append(state.v_plus)
        self._a.append(state.a)

    def __call__(self, report: StepReport):
        self._append_state(report.state)
        end_forces = report.forces[-1] if report.forces else None
        m = self.model.n_contacts
        self._lam_N.append(end_forces.lambda_N if end_forces is not None else np.zeros(m))
        self._lam_T.append(end_forces.lambda_T if end_forces is not None else np.zeros(m))
        if report.impulses is not None:
            self._Lam_N.append(report.impulses.Lambda_N)
            self._Lam_T.append(report.impulses.Lambda_T)
        else:
            self._Lam_N.append(np.zeros(m))
            self._Lam_T.append(np.zeros(m))
        self._impacted.append(report.impacted)
        self._fp_iterations.append(report.fp_iterations)
        self.reports_seen += 1

    # -- array views --------------------------------------------------------

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self._t)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self._q)

    @property
    def v_minus(self) -> np.ndarray:
        return np.asarray(self._v_minus)

    @property
    def v_plus(self) -> np.ndarray:
        return np.asarray(self._v_plus)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self._a)

    @property
    def lam_N(self) -> np.ndarray:
        return np.asarray(self._lam_N)

    @property
    def lam_T(self) -> np.ndarray:
        return np.asarray(self._lam_T)

    @property
    def Lam_N(self) -> np.ndarray:
        return np.asarray(self._Lam_N)

    @property
    def Lam_T(self) -> np.ndarray:
        return np.asarray(self._Lam_T)

    @property
    def impacted(self) -> np.ndarray:
        return np.asarray(self._impacted)

    def gaps(self) -> tuple[np.ndarray, np.ndarray]:
        """Normal and tangential gaps along the trajectory (re-evaluated)."""
        g_N = []
        g_T = []
        for q, v in zip(self._q, self._v_plus):
            ev = self.model.evaluate(np.asarray(q), np.asarray(v))
            g_N.append(ev.g_N)
            g_T.append(ev.g_T)
        return np.asarray(g_N), np.asarray(g_T)

    def energies(self) -> dict[str, np.ndarray]:
        """Kinetic, potential (gravity + elastic) and total energy per row."""
        kin = np.empty(len(self._t))
        pot = np.empty(len(self._t))
        for i, (q, v) in enumerate(zip(self._q, self._v_plus)):
            q = np.asarray(q)
            v = np.asarray(v)
            ev = self.model.evaluate(q, v)
            kin[i] = 0.5 * v @ ev.M @ v
            pot[i] = self.model.potential_energy(q)
        return {"kinetic": kin, "potential": pot, "total": kin + pot}

    def elastic_energy(self) -> np.ndarray:
        K_ff = getattr(self.model, "K_ff", None)
        if K_ff is None:
            return np.zeros(len(self._t))
        qf = self.q[:, 3:]
        return 0.5 * np.einsum("ij,jk,ik->i", qf, K_ff, qf)

    # -- channels -------------------------------------------------------

    def channel(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name == "impacted":
            return self.impacted.astype(float)
        if name == "fp_iterations":
            return np.asarray(self._fp_iterations, dtype=float)
        for prefix, arr in (("q_", self.q), ("v_", self.v_plus), ("vminus_", self.v_minus), ("a_", self.a)):
            if name.startswith(prefix):
                dof = name[len(prefix):]
                if dof in self.model.dof_names:
                    return arr[:, self.model.dof_names.index(dof)]
                raise ChannelError(f"unknown DOF {dof!r} in channel {name!r}")
        for prefix, arr in (
            ("lamN_", self.lam_N),
            ("lamT_", self.lam_T),
            ("LamN_", self.Lam_N),
            ("LamT_", self.Lam_T),
        ):
            if name.startswith(prefix):
                k = int(name[len(prefix):]) - 1
                if not 0 <= k < self.model.n_contacts:
                    raise ChannelError(f"contact index out of range in {name!r}")
                return arr[:, k]
        if name.startswith("gN_") or name.startswith("gT_"):
            g_N, g_T = self.gaps()
            arr = g_N if name.startswith("gN_") else g_T
            k = int(name.split("_")[1]) - 1
            if not 0 <= k < self.model.n_contacts:
                raise ChannelError(f"contact index out of range in {name!r}")
            return arr[:, k]
        if name.startswith("energy_"):
            kind = name[len("energy_"):]
            if kind == "elastic":
                return self.elastic_energy()
            energies = self.energies()
            if kind in energies:
                return energies[kind]
        raise ChannelError(f"unknown channel {name!r}")

    def sample(self, name: str, times: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
        """Channel values at given times; the times must hit recorded steps."""
        t = self.t
        values = self.channel(name)
        idx = np.searchsorted(t, times)
        idx = np.clip(idx, 0, len(t) - 1)
        idx_lo = np.clip(idx - 1, 0, len(t) - 1)
        better = np.abs(t[idx_lo] - times) < np.abs(t[idx] - times)
        idx = np.where(better, idx_lo, idx)
        if np.any(np.abs(t[idx] - times) > rtol * (1.0 + np.abs(times))):
            worst = np.argmax(np.abs(t[idx] - times))
            raise ValueError(f"sample time {times[worst]} not on the recorded grid")
        return values[idx]

    def default_channels(self) -> list[str]:
        names = ["t"]
        names += [f"q_{d}" for d in self.model.dof_names]
        names += [f"v_{d}" for d in self.model.dof_names]
        for k in range(self.model.n_contacts):
            names += [f"gN_{k+1}", f"lamN_{k+1}", f"lamT_{k+1}", f"LamN_{k+1}"]
        return names

    def to_csv(self, channels: list[str] | None = None) -> str:
        channels = channels or self.default_channels()
        cols = [self.channel(c) for c in channels]
        buf = io.StringIO()
        buf.write(",".join(channels) + "\n")
        for row in zip(*cols):
            buf.write(",".join(_FLOAT_FMT % v for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path: str, channels: list[str] | None = None):
        text = self.to_csv(channels)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def read_csv(source: str) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV (path or literal text) back into channel arrays."""
    if "\n" in source or "," in source:
        text = source
    else:
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    lines = [ln for ln in text.strip().split("\n") if ln]
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}
