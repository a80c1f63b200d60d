"""Modal reduction of the elastic coordinates.

The reduction basis solves the generalized symmetric eigenproblem on the
constrained elastic blocks (m_ff, K_ff) and is mass-normalized, so the reduced
elastic mass becomes the identity and the reduced stiffness the diagonal of
squared angular frequencies.  Because the floating-frame model evaluates every
operator through its assembled shape integrals, reducing a model is a one-time
transformation of those integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .core import ModelError
from .fem_beam import FloatingFrameSliderCrank, SliderCrankParams, element_shape_integrals


@dataclass
class ModalBasis:
    """Mass-normalized eigenvector basis of the constrained elastic problem."""

    Phi: np.ndarray
    omegas: np.ndarray
    bc: str
    n_m: int

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.omegas / (2.0 * np.pi)


def _fix_signs(Phi: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: largest-magnitude component positive."""
    idx = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[idx, np.arange(Phi.shape[1])])
    signs[signs == 0] = 1.0
    return Phi * signs


def eigenmodes(m_ff: np.ndarray, K_ff: np.ndarray, n_m: int | None = None, bc: str = "") -> ModalBasis:
    """Lowest ``n_m`` mass-normalized eigenpairs of (K_ff - w^2 m_ff) phi = 0."""
    n_f = m_ff.shape[0]
    if n_m is None:
        n_m = n_f
    if n_m > n_f:
        raise ModelError(f"requested {n_m} modes from a {n_f}-DOF elastic problem")
    w2, Phi = eigh(K_ff, m_ff)
    w2 = w2[:n_m]
    Phi = _fix_signs(Phi[:, :n_m])
    omegas = np.sqrt(np.maximum(w2, 0.0))
    return ModalBasis(Phi=Phi, omegas=omegas, bc=bc, n_m=n_m)


def model_modes(model: FloatingFrameSliderCrank, n_m: int | None = None) -> ModalBasis:
    m_ff, K_ff = model.elastic_blocks()
    return eigenmodes(m_ff, K_ff, n_m, bc=model.params.bc)


def reduce_model(model: FloatingFrameSliderCrank, basis: ModalBasis) -> FloatingFrameSliderCrank:
    """Replace the elastic coordinates by modal coordinates q_f = Phi q_m."""
    if model.basis is not None:
        raise ModelError("model is already reduced")
    if basis.Phi.shape[0] != model.n_elastic:
        raise ModelError("basis does not match the model's constrained elastic space")
    if basis.bc and basis.bc != model.params.bc:
        raise ModelError(
            f"basis built for boundary condition {basis.bc!r} but model uses {model.params.bc!r}"
        )
    return FloatingFrameSliderCrank(model.params, basis=basis.Phi)


def articulated_free_basis(
    params: SliderCrankParams, n_m: int | None = None, rigid_tol: float = 1e-6
) -> ModalBasis:
    """Eigenbasis with the rod pinned at the joint and free at the tip.

    The articulated elastic space keeps the rigid rotation about the pin; that
    motion duplicates the reference rotation, so the near-zero-frequency mode
    is excluded from the returned basis.
    """
    from dataclasses import replace

    art = FloatingFrameSliderCrank(replace(params, bc="articulated_free"))
    m_ff, K_ff = art.elastic_blocks()
    full = eigenmodes(m_ff, K_ff, bc="articulated_free")
    w_scale = full.omegas[-1]
    keep = np.flatnonzero(full.omegas > rigid_tol * w_scale)
    if n_m is not None:
        keep = keep[:n_m]
    return ModalBasis(
        Phi=full.Phi[:, keep], omegas=full.omegas[keep], bc="articulated_free", n_m=keep.size
    )


def articulated_free_model(
    params: SliderCrankParams, n_m: int | None = None
) -> FloatingFrameSliderCrank:
    """Reduced model on the articulated-free basis (rigid rotation excluded)."""
    from dataclasses import replace

    basis = articulated_free_basis(params, n_m)
    art_params = replace(params, bc="articulated_free")
    return FloatingFrameSliderCrank(art_params, basis=basis.Phi)


def coupling_magnitude(model: FloatingFrameSliderCrank, q: np.ndarray) -> float:
    """Norm of the rotation/elastic inertia coupling row at a state.

    Articulated-free bases are expected to shrink this coupling relative to
    clamped-free ones of equal size; the magnitude is reported, not asserted
    to vanish, since exact cancellation depends on the frame placement.
    """
    M = model.mass_matrix(q)
    return float(np.linalg.norm(M[1, 3:]))


def frequency_cutoff_mode_count(
    params: SliderCrankParams, dt: float, dt_over_T_cutoff: float = 1e2
) -> tuple[int, int, float]:
    """Retained-mode count for an annihilating integrator at step size ``dt``.

    Modes with frequency above ``f_c = dt_over_T_cutoff / dt`` are damped out
    within the step and need not be retained.  Returns (count, total, f_c).
    """
    model = FloatingFrameSliderCrank(params)
    basis = model_modes(model)
    f_c = dt_over_T_cutoff / dt
    count = int(np.sum(basis.frequencies_hz <= f_c))
    return count, basis.n_m, f_c


def free_free_condition_check(params: SliderCrankParams, n_modes: int = 4) -> dict:
    """Diagnostic for the mean-axis conditions on free-free beam modes.

    Assembles the bare rod (no slider tip mass, no boundary conditions) with
    the body frame at the beam mass center and reports the translational and
    rotational first moments of the lowest elastic free-free modes, normalized
    by the moments of the rigid modes.  Both should be near zero.
    """
    n_el = params.n_elements
    l_el = params.l2 / n_el
    rhoA = params.rho * params.area
    n_full = 3 * (n_el + 1)
    S_bar = np.zeros((2, n_full))
    S_ff = np.zeros((n_full, n_full))
    K_ff = np.zeros((n_full, n_full))
    I4 = np.zeros(n_full)
    for j in range(n_el):
        # frame at the mass center: element offsets measured from -l2/2
        el = element_shape_integrals(
            l_el, rhoA, params.E * params.area, params.E * params.second_moment,
            j * l_el - params.l2 / 2.0,
        )
        sl = slice(3 * j, 3 * j + 6)
        S_bar[:, sl] += el.S_bar
        S_ff[sl, sl] += el.S_ff
        K_ff[sl, sl] += el.K_ff
        I4[sl] += el.I4
    basis = eigenmodes(S_ff, K_ff)
    rigid = basis.Phi[:, :3]
    elastic = basis.Phi[:, 3: 3 + n_modes]
    scale_t = np.abs(S_bar @ rigid).max()
    scale_r = np.abs(I4 @ rigid).max()
    return {
        "translation_moment": np.abs(S_bar @ elastic).max() / scale_t,
        "rotation_moment": np.abs(I4 @ elastic).max() / scale_r,
        "rigid_frequencies": basis.omegas[:3],
        "first_elastic_frequency": basis.omegas[3],
    }
