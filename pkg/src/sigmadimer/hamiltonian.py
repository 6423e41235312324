"""Single-molecule, dipole-dipole and dimer Hamiltonians in units of B.

Conventions
-----------
Rotor functions are proportional to ``D^{J*}_{M Omega}``. The space-fixed
direction-cosine tensor of the molecular axis is ``C_q = D^{1*}_{q0}`` so that
``cos(theta) = C_0`` and its elements are ``angmom.d_matrix_element`` with
``(l, m, k) = (1, q, 0)``. The body-frame spin components obey normal
commutation rules; the space-fixed ``S_Z`` is ``sum_q D^{1*}_{0q} s_q``.
With these choices the field-free case (a) blocks are

    <J O M| N^2 |J O M>  = J(J+1) + 1/4      <J -O M| N^2 |J O M>  = -(J+1/2)
    <J O M| N.S |J O M>  = -1/2              <J -O M| N.S |J O M>  = (J+1/2)/2

which reproduce the case (b) ladder exactly.

Every matrix is assembled from one triangle and mirrored through an exact
Hermiticity identity, so ``H == H.T`` holds bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .angmom import HalfInt, Number, clebsch_gordan, d_matrix_element
from .basis import _check_jmax, build_decoupled_basis, build_single_basis
from .units import NAO, FieldPoint, MoleculeParams

HALF = 0.5


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True)
class Geometry:
    """Euler angles (radians) of the intermolecular axis in the field frame.

    The dimer spectrum is invariant under rotations about the common field
    axis, so ``phi`` only rephases matrix elements and ``chi`` never enters
    (``D^2_{m0}`` does not depend on it). Matrices are built at ``phi = 0``
    to stay real; both angles are kept for reporting.
    """

    phi: float = 0.0
    theta: float = math.pi / 2
    chi: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise HamiltonianError(f"theta must lie in [0, pi], got {self.theta}")
        if not all(math.isfinite(x) for x in (self.phi, self.theta, self.chi)):
            raise HamiltonianError("non-finite geometry")

    def axis(self) -> np.ndarray:
        s = math.sin(self.theta)
        return np.array([s * math.cos(self.phi), s * math.sin(self.phi), math.cos(self.theta)])


@dataclass(frozen=True)
class DimerConfig:
    params1: MoleculeParams = NAO
    params2: MoleculeParams = NAO
    fields: FieldPoint = field(default_factory=FieldPoint)
    xi_over_B: float = 0.0
    geometry: Geometry = field(default_factory=Geometry)

    def __post_init__(self) -> None:
        if self.xi_over_B < 0 or not math.isfinite(self.xi_over_B):
            raise HamiltonianError(f"xi_over_B must be finite and >= 0, got {self.xi_over_B}")
        if self.params1.B != self.params2.B:
            raise HamiltonianError("both molecules must share the energy unit B")

    def with_fields(self, fields: FieldPoint) -> "DimerConfig":
        return DimerConfig(self.params1, self.params2, fields, self.xi_over_B, self.geometry)


def small_d2(m: int, theta: float) -> float:
    """Reduced rotation matrix element d^2_{m0}(theta)."""
    c, s = math.cos(theta), math.sin(theta)
    if m == 0:
        return (3 * c * c - 1) / 2
    if abs(m) == 1:
        return -m * math.sqrt(1.5) * s * c
    if abs(m) == 2:
        return math.sqrt(3 / 8) * s * s
    raise HamiltonianError(f"|m| > 2 for rank 2: {m}")


@dataclass(frozen=True)
class SingleOperators:
    """Dimensionless single-molecule operators in the case (a) basis."""

    kets: tuple
    N2: np.ndarray
    NS: np.ndarray
    C: dict  # q -> C_q, q in (-1, 0, 1)
    SZ: np.ndarray
    S: dict  # q -> space-fixed spherical spin component S_q

    @property
    def cos_theta(self) -> np.ndarray:
        return self.C[0]

    @property
    def dim(self) -> int:
        return len(self.kets)


def _spin_q(tsp: int, q: int, ts: int) -> float:
    """<1/2 Sigma'| s_q |1/2 Sigma> for body-frame spin (normal commutation)."""
    if tsp != ts + 2 * q:
        return 0.0
    return math.sqrt(0.75) * clebsch_gordan(HALF, 1, HALF, ts / 2, q, tsp / 2)


@lru_cache(maxsize=None)
def _single_operators(tjmax: int) -> SingleOperators:
    kets = build_single_basis(HalfInt(tjmax))
    n = len(kets)
    N2 = np.zeros((n, n))
    NS = np.zeros((n, n))
    C0 = np.zeros((n, n))
    C1 = np.zeros((n, n))
    SZ = np.zeros((n, n))
    S1 = np.zeros((n, n))
    for a, ka in enumerate(kets):
        Jp, Op, Mp = ka.J, ka.Omega, ka.M
        for b, kb in enumerate(kets):
            J, O, M = kb.J, kb.Omega, kb.M
            if abs(J.twice_value - Jp.twice_value) > 2:
                continue
            # C_1 is not symmetric: fill the full matrix; C_-1 follows from it.
            C1[a, b] = d_matrix_element(Jp, Mp, Op, 1, 1, 0, J, M, O)
            s1 = 0.0
            for q in (-1, 0, 1):
                s = _spin_q(Op.twice_value, q, O.twice_value)
                if s:
                    s1 += d_matrix_element(Jp, Mp, Op, 1, 1, q, J, M, O) * s
            S1[a, b] = s1
            if b < a:
                continue
            if J == Jp and M == Mp:
                jh = J.twice_value / 2 + HALF
                if O == Op:
                    N2[a, b] = float(J) * (float(J) + 1) + 0.25
                    NS[a, b] = -0.5
                else:
                    N2[a, b] = -jh
                    NS[a, b] = 0.5 * jh
            C0[a, b] = d_matrix_element(Jp, Mp, Op, 1, 0, 0, J, M, O)
            sz = 0.0
            for q in (-1, 0, 1):
                s = _spin_q(Op.twice_value, q, O.twice_value)
                if s:
                    sz += d_matrix_element(Jp, Mp, Op, 1, 0, q, J, M, O) * s
            SZ[a, b] = sz
    for m in (N2, NS, C0, SZ):
        iu = np.triu_indices(n, 1)
        m[iu[1], iu[0]] = m[iu]
    C = {0: C0, 1: C1, -1: -C1.T}
    S = {0: SZ, 1: S1, -1: -S1.T}
    for arr in (N2, NS, C0, C1, SZ, S1, C[-1], S[-1]):
        arr.setflags(write=False)
    return SingleOperators(kets, N2, NS, C, SZ, S)


def single_operators(J_max: Number) -> SingleOperators:
    return _single_operators(_check_jmax(J_max).twice_value)


def build_single_hamiltonian(params: MoleculeParams, eta_el: float, eta_m: float, J_max: Number) -> np.ndarray:
    """H/B = N^2 + (gamma/B) N.S - eta_el cos(theta) + eta_m S_Z."""
    if eta_el < 0 or eta_m < 0:
        raise HamiltonianError("field parameters must be non-negative")
    ops = single_operators(J_max)
    return ops.N2 + params.gamma_over_B * ops.NS - eta_el * ops.C[0] + eta_m * ops.SZ


def m_blocks(J_max: Number) -> dict[int, np.ndarray]:
    """Index arrays of single-molecule kets grouped by 2M (H conserves M)."""
    kets = build_single_basis(J_max)
    tm = np.array([k.M.twice_value for k in kets])
    return {int(m): np.flatnonzero(tm == m) for m in np.unique(tm)}


def vdd_coefficients(geometry: Geometry) -> dict[tuple[int, int], float]:
    """-sqrt(6) C(1 1 2; nu lam nu+lam) d^2_{nu+lam,0}(theta) for each (nu, lam)."""
    out = {}
    for nu in (-1, 0, 1):
        for lam in (-1, 0, 1):
            c = clebsch_gordan(1, 1, 2, nu, lam, nu + lam)
            out[(nu, lam)] = -math.sqrt(6) * c * small_d2(nu + lam, geometry.theta)
    return out


@lru_cache(maxsize=8)
def _vdd(theta: float, tjmax: int) -> np.ndarray:
    C = _single_operators(tjmax).C
    coef = vdd_coefficients(Geometry(theta=theta))
    # (nu, lam) and (-nu, -lam) terms are transposes of each other; add them as K + K^T.
    V = coef[(0, 0)] * np.kron(C[0], C[0])
    for nu, lam in ((1, -1), (1, 0), (0, 1), (1, 1)):
        c = coef[(nu, lam)]
        if c == 0.0:
            continue
        K = c * np.kron(C[nu], C[lam])
        V += K + K.T
    V.setflags(write=False)
    return V


def build_vdd(geometry: Geometry, J_max: Number) -> np.ndarray:
    """Pair-basis matrix of V_dd / Xi (rotational coordinates only)."""
    return _vdd(float(geometry.theta), _check_jmax(J_max).twice_value)


def build_dimer_hamiltonian(config: DimerConfig, J_max: Number) -> np.ndarray:
    """H/B = H_1 (x) 1 + 1 (x) H_2 + (Xi/B) V_dd/Xi."""
    f = config.fields
    H1 = build_single_hamiltonian(config.params1, f.eta_el[0], f.eta_m[0], J_max)
    H2 = build_single_hamiltonian(config.params2, f.eta_el[1], f.eta_m[1], J_max)
    n = H1.shape[0]
    eye = np.eye(n)
    H = np.kron(H1, eye)
    H += np.kron(eye, H2)
    if config.xi_over_B:
        H += config.xi_over_B * build_vdd(config.geometry, J_max)
    return H


def product_transform(U1: np.ndarray, U2: np.ndarray, M: np.ndarray) -> np.ndarray:
    """(U1 (x) U2)^T M (U1 (x) U2)."""
    U = np.kron(U1, U2)
    return U.T @ M @ U


# ---------------------------------------------------------------------------
# Decoupled-basis oracle


def _gaunt_C(Np: int, mp: int, q: int, N: int, m: int) -> float:
    """<N' m'| C^1_q |N m> for normalized spherical harmonics."""
    if mp != m + q:
        return 0.0
    return math.sqrt((2 * N + 1) / (2 * Np + 1)) * clebsch_gordan(N, 1, Np, m, q, mp) * clebsch_gordan(N, 1, Np, 0, 0, 0)


@lru_cache(maxsize=None)
def _decoupled_ops(N_max: int):
    kets = build_decoupled_basis(N_max)
    n = len(kets)
    N2 = np.zeros((n, n))
    NS = np.zeros((n, n))
    SZ = np.zeros((n, n))
    # Cartesian unit-vector components of the molecular axis.
    ux = np.zeros((n, n), dtype=complex)
    uy = np.zeros((n, n), dtype=complex)
    uz = np.zeros((n, n), dtype=complex)
    for a, ka in enumerate(kets):
        for b, kb in enumerate(kets):
            if ka.N == kb.N:
                if ka == kb:
                    N2[a, b] = ka.N * (ka.N + 1)
                    NS[a, b] = kb.mN * kb.twice_mS / 2
                    SZ[a, b] = kb.twice_mS / 2
                elif ka.mN == kb.mN + 1 and ka.twice_mS == kb.twice_mS - 2:
                    NS[a, b] = 0.5 * math.sqrt(kb.N * (kb.N + 1) - kb.mN * (kb.mN + 1))
                elif ka.mN == kb.mN - 1 and ka.twice_mS == kb.twice_mS + 2:
                    NS[a, b] = 0.5 * math.sqrt(kb.N * (kb.N + 1) - kb.mN * (kb.mN - 1))
            if ka.twice_mS != kb.twice_mS:
                continue
            cm = _gaunt_C(ka.N, ka.mN, -1, kb.N, kb.mN)
            c0 = _gaunt_C(ka.N, ka.mN, 0, kb.N, kb.mN)
            cp = _gaunt_C(ka.N, ka.mN, 1, kb.N, kb.mN)
            ux[a, b] = (cm - cp) / math.sqrt(2)
            uy[a, b] = 1j * (cm + cp) / math.sqrt(2)
            uz[a, b] = c0
    return kets, N2, NS, SZ, (ux, uy, uz)


def build_decoupled_single(params: MoleculeParams, eta_el: float, eta_m: float, N_max: int) -> np.ndarray:
    """Single-molecule H/B in the |N m_N>|S m_S> basis."""
    _, N2, NS, SZ, (_, _, uz) = _decoupled_ops(int(N_max))
    return N2 + params.gamma_over_B * NS - eta_el * uz.real + eta_m * SZ


def build_decoupled_vdd(geometry: Geometry, N_max: int) -> np.ndarray:
    """V_dd / Xi = u1 . (1 - 3 n n^T) . u2 in the decoupled pair basis."""
    _, _, _, _, u = _decoupled_ops(int(N_max))
    n = geometry.axis()
    T = np.eye(3) - 3 * np.outer(n, n)
    V = sum(T[i, j] * np.kron(u[i], u[j]) for i in range(3) for j in range(3) if T[i, j] != 0.0)
    if np.abs(V.imag).max() > 1e-14:
        return V
    return np.ascontiguousarray(V.real)


def build_decoupled_oracle(config: DimerConfig, N_max: int) -> np.ndarray:
    """The dimer Hamiltonian rebuilt in the decoupled basis (cross-check only)."""
    if N_max < 0 or int(N_max) != N_max:
        raise HamiltonianError("N_max must be a non-negative integer")
    f = config.fields
    H1 = build_decoupled_single(config.params1, f.eta_el[0], f.eta_m[0], N_max)
    H2 = build_decoupled_single(config.params2, f.eta_el[1], f.eta_m[1], N_max)
    eye = np.eye(H1.shape[0])
    H = np.kron(H1, eye) + np.kron(eye, H2)
    if config.xi_over_B:
        H = H + config.xi_over_B * build_decoupled_vdd(config.geometry, N_max)
    return H
