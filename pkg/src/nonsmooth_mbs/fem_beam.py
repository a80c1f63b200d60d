"""Floating frame of reference model of the flexible slider-crank.

The connecting rod is a planar Euler-Bernoulli beam described in a body frame
attached tangentially (or pinned) at the crank joint.  Rigid crank and slider
are folded into the rod's equations through the joint constraints: the crank
eliminates the frame's translational coordinates in favor of the crank angle,
and the slider acts kinematically as a point mass at the rod tip plus an
independent rotation carrying only its own rotary inertia.

All configuration-dependent operators (mass blocks, quadratic velocity vector,
gravity, gaps, force directions) are assembled from a fixed set of inertia
shape integrals, so modal reduction amounts to transforming those integrals
once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MechanicalModel, ModelError, SystemEvaluation

# 90-degree rotation A_theta^T A appearing in the inertia coupling integrals
I_TILDE = np.array([[0.0, 1.0], [-1.0, 0.0]])

BOUNDARY_CONDITIONS = ("tangential_clamped_free", "pinned", "articulated_free")


def _gauss01(n: int):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def shape_function(xi: float, l: float) -> np.ndarray:
    """Element interpolation of (axial, transverse) displacement, 2 x 6.

    Linear in the axial direction, cubic Hermite in the transverse one; nodal
    DOFs are (u1, v1, phi1, u2, v2, phi2)."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    return np.array(
        [
            [1.0 - xi, 0.0, 0.0, xi, 0.0, 0.0],
            [
                0.0,
                1.0 - 3.0 * xi**2 + 2.0 * xi**3,
                l * (xi - 2.0 * xi**2 + xi**3),
                0.0,
                3.0 * xi**2 - 2.0 * xi**3,
                l * (xi**3 - xi**2),
            ],
        ]
    )


def strain_operator(xi: float, l: float) -> np.ndarray:
    """Axial strain and bending curvature rows (u', v''), 2 x 6."""
    return np.array(
        [
            [-1.0 / l, 0.0, 0.0, 1.0 / l, 0.0, 0.0],
            [
                0.0,
                (-6.0 + 12.0 * xi) / l**2,
                (-4.0 + 6.0 * xi) / l,
                0.0,
                (6.0 - 12.0 * xi) / l**2,
                (6.0 * xi - 2.0) / l,
            ],
        ]
    )


@dataclass
class BeamElementData:
    """Inertia shape integrals and structural matrices of one element.

    ``x_offset`` locates the element start along the undeformed rod; the
    undeformed position integrals (I1..I4) depend on it, the purely elastic
    ones (S_bar, S_tilde, S_ff, K_ff) do not.
    """

    l: float
    rhoA: float
    EA: float
    EI: float
    x_offset: float
    I0: np.ndarray
    I1: np.ndarray
    I2: float
    I3: np.ndarray
    I4: np.ndarray
    S_bar: np.ndarray
    S_tilde: np.ndarray
    S_ff: np.ndarray
    K_ff: np.ndarray


def element_shape_integrals(
    l: float, rhoA: float, EA: float, EI: float, x_offset: float = 0.0, n_gauss_mass: int = 4
) -> BeamElementData:
    """Evaluate all element integrals by Gauss quadrature.

    The mass integrands are polynomials of degree <= 6 (4 points exact); the
    strain-energy integrands have degree <= 2 (2 points exact).
    """
    if l <= 0 or rhoA <= 0:
        raise ModelError("element length and mass density must be positive")
    xs, ws = _gauss01(n_gauss_mass)
    I1 = np.zeros(2)
    I2 = 0.0
    I3 = np.zeros(6)
    I4 = np.zeros(6)
    S_bar = np.zeros((2, 6))
    S_tilde = np.zeros((6, 6))
    S_ff = np.zeros((6, 6))
    for xi, w in zip(xs, ws):
        S = shape_function(xi, l)
        x = x_offset + xi * l
        dm = rhoA * l * w
        I1 += dm * np.array([x, 0.0])
        I2 += dm * x * x
        I3 += dm * x * S[0]
        I4 += dm * x * S[1]  # u0^T Itilde S reduces to x * (transverse row)
        S_bar += dm * S
        S_tilde += dm * S.T @ I_TILDE @ S
        S_ff += dm * S.T @ S
    xs2, ws2 = _gauss01(2)
    K_ff = np.zeros((6, 6))
    D = np.diag([EA, EI])
    for xi, w in zip(xs2, ws2):
        B = strain_operator(xi, l)
        K_ff += l * w * B.T @ D @ B
    I0 = rhoA * l * np.eye(2)
    return BeamElementData(l, rhoA, EA, EI, x_offset, I0, I1, I2, I3, I4, S_bar, S_tilde, S_ff, K_ff)


def boundary_condition_indices(bc: str, n_elements: int) -> np.ndarray:
    """Elastic DOF indices eliminated by the reference-frame boundary condition.

    tangential_clamped_free: root displacements and rotation (frame tangential
    to the deflection at the root).  pinned: root displacements plus the tip
    transverse deflection.  articulated_free: root displacements only; the
    remaining rigid rotation about the pin is meant to be dropped from a modal
    basis, not used for direct simulation.
    """
    if n_elements < 1:
        raise ModelError("need at least one element")
    n_full = 3 * (n_elements + 1)
    if bc == "tangential_clamped_free":
        fixed = [0, 1, 2]
    elif bc == "pinned":
        fixed = [0, 1, n_full - 2]
    elif bc == "articulated_free":
        fixed = [0, 1]
    else:
        raise ModelError(f"unknown boundary condition {bc!r}")
    return np.array(fixed, dtype=int)


@dataclass
class SliderCrankParams:
    """Geometry, inertia, contact and material data of the mechanism.

    The rod cross section is derived from its mass and rotary inertia:
    thickness D = sqrt(12 J2 / m2 - l2^2), height H = m2 / (rho l2 D), area
    A = H D, second moment I = H D^3 / 12.  The notch half-height is b + c so
    that the centered slider sees gap c on all four corners.

    ``crank_inertia_half_factor`` keeps the printed joint inertia
    I1 = J1 + 0.5 m1 l1^2; disabling it uses the parallel-axis value with 1/4.
    """

    l1: float = 0.1530
    l2: float = 0.3060
    a: float = 0.0500
    b: float = 0.0250
    c: float = 0.0010
    m1: float = 0.0380
    m2: float = 0.0380
    m3: float = 0.0760
    J1: float = 7.4e-5
    J2: float = 5.9e-4
    J3: float = 2.7e-6
    E: float = 2.0e11
    rho: float = 7800.0
    gravity: float = 9.81
    torque: float = 0.0
    mu: tuple = (0.01, 0.01, 0.01, 0.01)
    eps_N: tuple = (0.4, 0.4, 0.4, 0.4)
    eps_T: tuple = (0.0, 0.0, 0.0, 0.0)
    omega1_0: float = 150.0
    omega2_0: float = -75.0
    omega3_0: float = 0.0
    n_elements: int = 4
    bc: str = "tangential_clamped_free"
    crank_inertia_half_factor: bool = True

    def __post_init__(self):
        if 12.0 * self.J2 / self.m2 <= self.l2**2:
            raise ModelError("rod inertia incompatible with its length: 12 J2/m2 must exceed l2^2")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ModelError(f"unknown boundary condition {self.bc!r}")

    @property
    def thickness(self) -> float:
        return np.sqrt(12.0 * self.J2 / self.m2 - self.l2**2)

    @property
    def height(self) -> float:
        return self.m2 / (self.rho * self.l2 * self.thickness)

    @property
    def area(self) -> float:
        return self.height * self.thickness

    @property
    def second_moment(self) -> float:
        return self.height * self.thickness**3 / 12.0

    @property
    def half_notch(self) -> float:
        return self.b + self.c

    @property
    def crank_joint_inertia(self) -> float:
        factor = 0.5 if self.crank_inertia_half_factor else 0.25
        return self.J1 + factor * self.m1 * self.l1**2

    @classmethod
    def table1(cls, **overrides) -> "SliderCrankParams":
        return cls(**overrides)

    @classmethod
    def table2(cls, **overrides) -> "SliderCrankParams":
        base = dict(
            c=0.0005,
            torque=1.0,
            eps_N=(0.1, 0.1, 0.1, 0.1),
            mu=(0.1, 0.1, 0.1, 0.1),
            omega1_0=0.0,
            omega2_0=0.0,
            omega3_0=0.0,
        )
        base.update(overrides)
        return cls(**base)

    def initial_conditions(self) -> tuple[np.ndarray, np.ndarray]:
        """Initial (q0, v0) over (theta1, theta2, theta3, q_f): angles at zero,
        Table rates on the angles, undeformed rod at rest."""
        return np.zeros(3), np.array([self.omega1_0, self.omega2_0, self.omega3_0])


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rot_theta(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[-s, -c], [c, -s]])


class FloatingFrameSliderCrank(MechanicalModel):
    """Assembled flexible slider-crank over DOFs (theta1, theta2, theta3, q_f).

    ``basis`` optionally replaces the elastic coordinates by a reduction basis
    (columns over the constrained elastic DOFs); all shape integrals are
    transformed once in the constructor, so reduced and full models share
    every code path.
    """

    def __init__(self, params: SliderCrankParams, basis: np.ndarray | None = None):
        p = params
        self.params = p
        n_el = p.n_elements
        l_el = p.l2 / n_el
        rhoA = p.rho * p.area
        n_full = 3 * (n_el + 1)

        S_bar = np.zeros((2, n_full))
        S_tilde = np.zeros((n_full, n_full))
        S_ff = np.zeros((n_full, n_full))
        K_ff = np.zeros((n_full, n_full))
        I1 = np.zeros(2)
        I2 = 0.0
        I3 = np.zeros(n_full)
        I4 = np.zeros(n_full)
        self.elements = []
        for j in range(n_el):
            el = element_shape_integrals(l_el, rhoA, p.E * p.area, p.E * p.second_moment, j * l_el)
            self.elements.append(el)
            sl = slice(3 * j, 3 * j + 6)
            S_bar[:, sl] += el.S_bar
            S_tilde[sl, sl] += el.S_tilde
            S_ff[sl, sl] += el.S_ff
            K_ff[sl, sl] += el.K_ff
            I1 += el.I1
            I2 += el.I2
            I3[sl] += el.I3
            I4[sl] += el.I4

        # tip selector: S(xi=1) of the last element picks the end-node (u, v)
        Sel = np.zeros((2, n_full))
        Sel[:, 3 * (n_el - 1): 3 * (n_el - 1) + 6] = shape_function(1.0, l_el)

        # rigid slider = point mass m3 at the rod tip (plus J3 on theta3)
        tip = np.array([p.l2, 0.0])
        I1 += p.m3 * tip
        I2 += p.m3 * p.l2**2
        I3 += p.m3 * tip @ Sel
        I4 += p.m3 * tip @ I_TILDE @ Sel
        S_bar += p.m3 * Sel
        S_tilde += p.m3 * Sel.T @ I_TILDE @ Sel
        S_ff += p.m3 * Sel.T @ Sel

        fixed = boundary_condition_indices(p.bc, n_el)
        keep = np.setdiff1d(np.arange(n_full), fixed)
        self.fixed_elastic = fixed
        self.kept_elastic = keep

        self.S_bar = S_bar[:, keep]
        self.S_tilde = S_tilde[np.ix_(keep, keep)]
        self.S_ff = S_ff[np.ix_(keep, keep)]
        self.K_ff = K_ff[np.ix_(keep, keep)]
        self.I1 = I1
        self.I2 = I2
        self.I3 = I3[keep]
        self.I4 = I4[keep]
        self.Sel = Sel[:, keep]

        if basis is not None:
            if basis.shape[0] != keep.size:
                raise ModelError("reduction basis rows must match constrained elastic DOFs")
            self.S_bar = self.S_bar @ basis
            self.S_tilde = basis.T @ self.S_tilde @ basis
            self.S_ff = basis.T @ self.S_ff @ basis
            self.K_ff = basis.T @ self.K_ff @ basis
            self.I3 = self.I3 @ basis
            self.I4 = self.I4 @ basis
            self.Sel = self.Sel @ basis
        self.basis = basis

        self.n_elastic = self.S_ff.shape[0]
        self.n_dof = 3 + self.n_elastic
        self.n_contacts = 4
        self.mu = np.asarray(p.mu, dtype=float)
        self.eps_N = np.asarray(p.eps_N, dtype=float)
        self.eps_T = np.asarray(p.eps_T, dtype=float)
        self._check_contact_params()

        self.mass_rod_slider = p.m2 + p.m3
        self.M00 = self.mass_rod_slider * p.l1**2 + p.crank_joint_inertia

        if basis is not None:
            names = [f"m{k+1}" for k in range(self.n_elastic)]
        else:
            names = [f"f{k+1}" for k in range(self.n_elastic)]
        self.dof_names = ["theta1", "theta2", "theta3"] + names

        self._K = np.zeros((self.n_dof, self.n_dof))
        self._K[3:, 3:] = self.K_ff
        self._C = np.zeros((self.n_dof, self.n_dof))

    # -- kinematic helpers -------------------------------------------------

    def _frame(self, q):
        th1, th2 = q[0], q[1]
        C_th1 = np.array([-self.params.l1 * np.sin(th1), self.params.l1 * np.cos(th1)])
        D_th1 = np.array([-self.params.l1 * np.cos(th1), -self.params.l1 * np.sin(th1)])
        return C_th1, D_th1, _rot(th2), _rot_theta(th2)

    def tip_position(self, q) -> np.ndarray:
        """Slider mass-center position in the inertial frame."""
        p = self.params
        A = _rot(q[1])
        u_cg = np.array([p.l2, 0.0]) + self.Sel @ q[3:]
        return np.array([p.l1 * np.cos(q[0]), p.l1 * np.sin(q[0])]) + A @ u_cg

    def mass_matrix(self, q) -> np.ndarray:
        p = self.params
        qf = q[3:]
        C_th1, _, A, A_th = self._frame(q)
        vec_u = self.I1 + self.S_bar @ qf
        M = np.zeros((self.n_dof, self.n_dof))
        M[0, 0] = self.M00
        M[0, 1] = M[1, 0] = C_th1 @ (A_th @ vec_u)
        M[0, 3:] = M[3:, 0] = C_th1 @ (A @ self.S_bar)
        M[1, 1] = self.I2 + 2.0 * (self.I3 @ qf) + qf @ (self.S_ff @ qf)
        M[1, 3:] = M[3:, 1] = self.I4 + qf @ self.S_tilde
        M[2, 2] = p.J3
        M[3:, 3:] = self.S_ff
        return M

    def quadratic_velocity(self, q, v) -> np.ndarray:
        """Generalized inertia forces -Mdot qdot + dT/dq."""
        qf = q[3:]
        w1, w2 = v[0], v[1]
        qfd = v[3:]
        C_th1, D_th1, A, A_th = self._frame(q)
        vec_u = self.I1 + self.S_bar @ qf
        Sqd = self.S_bar @ qfd

        Mdot = np.zeros((self.n_dof, self.n_dof))
        Mdot[0, 1] = Mdot[1, 0] = (
            w1 * (D_th1 @ (A_th @ vec_u)) - w2 * (C_th1 @ (A @ vec_u)) + C_th1 @ (A_th @ Sqd)
        )
        Mdot[0, 3:] = Mdot[3:, 0] = w1 * (D_th1 @ (A @ self.S_bar)) + w2 * (
            C_th1 @ (A_th @ self.S_bar)
        )
        Mdot[1, 1] = 2.0 * (self.I3 @ qfd) + 2.0 * qf @ (self.S_ff @ qfd)
        Mdot[1, 3:] = Mdot[3:, 1] = qfd @ self.S_tilde

        dTdq = np.zeros(self.n_dof)
        dTdq[0] = w1 * w2 * (D_th1 @ (A_th @ vec_u)) + w1 * (D_th1 @ (A @ Sqd))
        dTdq[1] = -w1 * w2 * (C_th1 @ (A @ vec_u)) + w1 * (C_th1 @ (A_th @ Sqd))
        dTdq[3:] = (
            w1 * w2 * (self.S_bar.T @ (A_th.T @ C_th1))
            + w2 * w2 * (self.I3 + self.S_ff @ qf)
            + w2 * (self.S_tilde @ qfd)
        )
        return -Mdot @ v + dTdq

    def external_forces(self, q) -> np.ndarray:
        """Gravity on crank, rod and slider plus the constant crank torque."""
        p = self.params
        qf = q[3:]
        C_th1, _, A, A_th = self._frame(q)
        vec_u = self.I1 + self.S_bar @ qf
        grav = np.array([0.0, -p.gravity])
        h = np.zeros(self.n_dof)
        h[0] = (
            -self.mass_rod_slider * p.gravity * p.l1 * np.cos(q[0])
            - p.m1 * p.gravity * (p.l1 / 2.0) * np.cos(q[0])
            + p.torque
        )
        h[1] = grav @ (A_th @ vec_u)
        h[3:] = grav @ (A @ self.S_bar)
        return h

    def gap_functions(self, q) -> tuple[np.ndarray, np.ndarray]:
        """Normal and tangential gaps of the four slider corners."""
        p = self.params
        r = self.tip_position(q)
        th3 = q[2]
        s3, c3 = np.sin(th3), np.cos(th3)
        d2 = p.half_notch
        a, b = p.a, p.b
        g_N = np.array(
            [
                d2 - r[1] + a * s3 - b * c3,
                d2 - r[1] - a * s3 - b * c3,
                d2 + r[1] - a * s3 - b * c3,
                d2 + r[1] + a * s3 - b * c3,
            ]
        )
        g_T = np.array(
            [
                r[0] - a * c3 - b * s3,
                r[0] + a * c3 - b * s3,
                r[0] - a * c3 + b * s3,
                r[0] + a * c3 + b * s3,
            ]
        )
        return g_N, g_T

    def force_directions(self, q) -> tuple[np.ndarray, np.ndarray]:
        """Generalized force directions W_N, W_T = gradients of the gaps."""
        p = self.params
        qf = q[3:]
        C_th1, _, A, A_th = self._frame(q)
        u_cg = np.array([p.l2, 0.0]) + self.Sel @ qf
        dr_dth2 = A_th @ u_cg
        dr_dqf = A @ self.Sel  # 2 x n_elastic
        th3 = q[2]
        s3, c3 = np.sin(th3), np.cos(th3)
        a, b = p.a, p.b

        W_N = np.zeros((self.n_dof, 4))
        W_T = np.zeros((self.n_dof, 4))
        sign_y = np.array([-1.0, -1.0, 1.0, 1.0])
        th3_N = np.array(
            [a * c3 + b * s3, -a * c3 + b * s3, -a * c3 + b * s3, a * c3 + b * s3]
        )
        th3_T = np.array(
            [a * s3 - b * c3, -a * s3 - b * c3, a * s3 + b * c3, -a * s3 + b * c3]
        )
        for k in range(4):
            W_N[0, k] = sign_y[k] * C_th1[1]
            W_N[1, k] = sign_y[k] * dr_dth2[1]
            W_N[2, k] = th3_N[k]
            W_N[3:, k] = sign_y[k] * dr_dqf[1]
            W_T[0, k] = C_th1[0]
            W_T[1, k] = dr_dth2[0]
            W_T[2, k] = th3_T[k]
            W_T[3:, k] = dr_dqf[0]
        return W_N, W_T

    # -- model contract ----------------------------------------------------

    def evaluate(self, q, v) -> SystemEvaluation:
        M = self.mass_matrix(q)
        h = self.quadratic_velocity(q, v) + self.external_forces(q)
        g_N, g_T = self.gap_functions(q)
        W_N, W_T = self.force_directions(q)
        return SystemEvaluation(M, self._C, self._K, h, W_N, W_T, g_N, g_T)

    def potential_energy(self, q) -> float:
        p = self.params
        qf = q[3:]
        A = _rot(q[1])
        vec_u = self.I1 + self.S_bar @ qf
        y_moment = (
            p.m1 * (p.l1 / 2.0) * np.sin(q[0])
            + self.mass_rod_slider * p.l1 * np.sin(q[0])
            + (A @ vec_u)[1]
        )
        U_g = p.gravity * y_moment
        U_el = 0.5 * qf @ (self.K_ff @ qf)
        U_torque = -p.torque * q[0]
        return float(U_g + U_el + U_torque)

    def elastic_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """(m_ff, K_ff) on the constrained elastic DOFs, for modal analysis."""
        return self.S_ff.copy(), self.K_ff.copy()


class RigidSliderCrank(MechanicalModel):
    """Rigid 3-DOF reference mechanism (theta1, theta2, theta3).

    Independent closed-form Lagrangian implementation sharing the gap geometry
    with the flexible model at zero deformation; used to validate the
    stiff-limit flexible runs.
    """

    def __init__(self, params: SliderCrankParams):
        p = self.params = params
        self.n_dof = 3
        self.n_contacts = 4
        self.mu = np.asarray(p.mu, dtype=float)
        self.eps_N = np.asarray(p.eps_N, dtype=float)
        self.eps_T = np.asarray(p.eps_T, dtype=float)
        self._check_contact_params()
        self.dof_names = ["theta1", "theta2", "theta3"]
        # first moment and second moment of rod + tip slider about the joint
        self.first_moment = p.m2 * p.l2 / 2.0 + p.m3 * p.l2
        self.I_rod = p.m2 * p.l2**2 / 3.0 + p.m3 * p.l2**2
        self.M00 = p.crank_joint_inertia + (p.m2 + p.m3) * p.l1**2
        self._C = np.zeros((3, 3))
        self._K = np.zeros((3, 3))

    def tip_position(self, q) -> np.ndarray:
        p = self.params
        return np.array(
            [
                p.l1 * np.cos(q[0]) + p.l2 * np.cos(q[1]),
                p.l1 * np.sin(q[0]) + p.l2 * np.sin(q[1]),
            ]
        )

    def mass_matrix(self, q) -> np.ndarray:
        p = self.params
        M = np.zeros((3, 3))
        M[0, 0] = self.M00
        M[0, 1] = M[1, 0] = p.l1 * self.first_moment * np.cos(q[0] - q[1])
        M[1, 1] = self.I_rod
        M[2, 2] = p.J3
        return M

    def quadratic_velocity(self, q, v) -> np.ndarray:
        p = self.params
        s21 = np.sin(q[1] - q[0])
        coup = p.l1 * self.first_moment * s21
        return np.array([coup * v[1] ** 2, -coup * v[0] ** 2, 0.0])

    def external_forces(self, q) -> np.ndarray:
        p = self.params
        return np.array(
            [
                -p.gravity * p.l1 * np.cos(q[0]) * (p.m1 / 2.0 + p.m2 + p.m3) + p.torque,
                -p.gravity * p.l2 * np.cos(q[1]) * (p.m2 / 2.0 + p.m3),
                0.0,
            ]
        )

    def gap_functions(self, q) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        r = self.tip_position(q)
        s3, c3 = np.sin(q[2]), np.cos(q[2])
        d2 = p.half_notch
        a, b = p.a, p.b
        g_N = np.array(
            [
                d2 - r[1] + a * s3 - b * c3,
                d2 - r[1] - a * s3 - b * c3,
                d2 + r[1] - a * s3 - b * c3,
                d2 + r[1] + a * s3 - b * c3,
            ]
        )
        g_T = np.array(
            [
                r[0] - a * c3 - b * s3,
                r[0] + a * c3 - b * s3,
                r[0] - a * c3 + b * s3,
                r[0] + a * c3 + b * s3,
            ]
        )
        return g_N, g_T

    def force_directions(self, q) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        s3, c3 = np.sin(q[2]), np.cos(q[2])
        a, b = p.a, p.b
        dry_dth1 = p.l1 * np.cos(q[0])
        dry_dth2 = p.l2 * np.cos(q[1])
        drx_dth1 = -p.l1 * np.sin(q[0])
        drx_dth2 = -p.l2 * np.sin(q[1])
        sign_y = np.array([-1.0, -1.0, 1.0, 1.0])
        th3_N = np.array(
            [a * c3 + b * s3, -a * c3 + b * s3, -a * c3 + b * s3, a * c3 + b * s3]
        )
        th3_T = np.array(
            [a * s3 - b * c3, -a * s3 - b * c3, a * s3 + b * c3, -a * s3 + b * c3]
        )
        W_N = np.zeros((3, 4))
        W_T = np.zeros((3, 4))
        for k in range(4):
            W_N[:, k] = [sign_y[k] * dry_dth1, sign_y[k] * dry_dth2, th3_N[k]]
            W_T[:, k] = [drx_dth1, drx_dth2, th3_T[k]]
        return W_N, W_T

    def evaluate(self, q, v) -> SystemEvaluation:
        M = self.mass_matrix(q)
        h = self.quadratic_velocity(q, v) + self.external_forces(q)
        g_N, g_T = self.gap_functions(q)
        W_N, W_T = self.force_directions(q)
        return SystemEvaluation(M, self._C, self._K, h, W_N, W_T, g_N, g_T)

    def potential_energy(self, q) -> float:
        p = self.params
        U_g = p.gravity * (
            p.m1 * (p.l1 / 2.0) * np.sin(q[0])
            + p.m2 * (p.l1 * np.sin(q[0]) + (p.l2 / 2.0) * np.sin(q[1]))
            + p.m3 * (p.l1 * np.sin(q[0]) + p.l2 * np.sin(q[1]))
        )
        return float(U_g - p.torque * q[0])


def rigid_slider_crank(params: SliderCrankParams | None = None) -> RigidSliderCrank:
    return RigidSliderCrank(params or SliderCrankParams())
