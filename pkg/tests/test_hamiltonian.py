import math

import numpy as np
import pytest

from sigmadimer.basis import build_single_basis
from sigmadimer.hamiltonian import (
    DimerConfig,
    Geometry,
    HamiltonianError,
    build_decoupled_oracle,
    build_decoupled_single,
    build_dimer_hamiltonian,
    build_single_hamiltonian,
    build_vdd,
    m_blocks,
    single_operators,
)
from sigmadimer.units import NAO, FieldPoint, MoleculeParams

from test_angmom import small_d


def case_b_levels(params, N_max):
    """E/B = N(N+1) + (gamma/2B)[J(J+1) - N(N+1) - 3/4], each with degeneracy 2J+1."""
    g = params.gamma / params.B
    out = []
    for N in range(N_max + 1):
        for J in (N - 0.5, N + 0.5):
            if J < 0:
                continue
            e = N * (N + 1) + 0.5 * g * (J * (J + 1) - N * (N + 1) - 0.75)
            out += [e] * int(2 * J + 1)
    return np.sort(out)


def test_field_free_case_b_ladder():
    w = np.linalg.eigvalsh(build_single_hamiltonian(NAO, 0.0, 0.0, 3.5))
    ref = case_b_levels(NAO, 2)
    assert np.allclose(w[: ref.size], ref, atol=1e-9, rtol=0)


def test_single_hamiltonian_symmetric_and_conserves_M():
    H = build_single_hamiltonian(NAO, 1.3, 0.7, 3.5)
    assert np.array_equal(H, H.T)
    M = np.array([k.M.twice_value for k in build_single_basis(3.5)])
    assert np.all(H[M[:, None] != M[None, :]] == 0.0)
    assert sum(b.size for b in m_blocks(3.5).values()) == H.shape[0]


@pytest.mark.parametrize("eta_el,eta_m", [(0.0, 1.0), (1.0, 0.0), (1.0, 0.7), (3.0, 2.63)])
def test_case_a_matches_decoupled_oracle(eta_el, eta_m):
    a = np.linalg.eigvalsh(build_single_hamiltonian(NAO, eta_el, eta_m, 21 / 2))[:8]
    b = np.linalg.eigvalsh(build_decoupled_single(NAO, eta_el, eta_m, 10))[:8]
    assert np.allclose(a, b, atol=1e-8, rtol=0)


def test_spin_algebra_inside_untruncated_block():
    ops = single_operators(3.5)
    keep = np.array([k.J.twice_value <= 5 for k in ops.kets])
    S = ops.S
    S2 = S[0] @ S[0] - S[1] @ S[-1] - S[-1] @ S[1]
    assert np.allclose(S2[np.ix_(keep, keep)], 0.75 * np.eye(keep.sum()), atol=1e-12)
    assert np.allclose(S[0], ops.SZ, atol=1e-15)
    # [S_0, S_{+1}] = S_{+1}
    comm = S[0] @ S[1] - S[1] @ S[0]
    assert np.allclose(comm[np.ix_(keep, keep)], S[1][np.ix_(keep, keep)], atol=1e-12)


def test_zeeman_sign_lowers_M_minus_half():
    H = build_single_hamiltonian(NAO, 0.0, 0.5, 3.5)
    w, v = np.linalg.eigh(H)
    M = np.array([k.M.twice_value for k in build_single_basis(3.5)])
    assert M[np.argmax(v[:, 0] ** 2)] == -1


def euler_grid(n_ang=16, n_beta=32):
    x, wb = np.polynomial.legendre.leggauss(n_beta)
    beta = 0.5 * math.pi * (x + 1)
    wb = 0.5 * math.pi * wb * np.sin(beta)
    ang = 2 * math.pi * np.arange(n_ang) / n_ang
    A, Bt, G = np.meshgrid(ang, beta, ang, indexing="ij")
    W = np.meshgrid(np.full(n_ang, 2 * math.pi / n_ang), wb, np.full(n_ang, 2 * math.pi / n_ang), indexing="ij")
    return A.ravel(), Bt.ravel(), G.ravel(), (W[0] * W[1] * W[2]).ravel(), beta


def rotor_functions(kets, A, Bt, G, beta):
    """psi_{J Omega M} = sqrt((2J+1)/8pi^2) conj(D^J_{M Omega}) on the grid."""
    out = []
    ib = np.searchsorted(beta, Bt)
    for k in kets:
        tj, tm, to = k.J.twice_value, k.M.twice_value, k.Omega.twice_value
        d = np.array([small_d(tj, tm, to, b) for b in beta])[ib]
        D = np.exp(-0.5j * tm * A) * d * np.exp(-0.5j * to * G)
        out.append(math.sqrt((tj + 1) / (8 * math.pi**2)) * np.conj(D))
    return np.array(out)


@pytest.mark.parametrize("theta", [math.pi / 2, 0.0, 0.9])
def test_vdd_against_cartesian_quadrature(theta):
    J_max = 2.5
    kets = build_single_basis(J_max)
    A, Bt, G, W, beta = euler_grid()
    psi = rotor_functions(kets, A, Bt, G, beta)
    n_vec = [np.sin(Bt) * np.cos(A), np.sin(Bt) * np.sin(A), np.cos(Bt)]
    spin = np.array([[a.Omega == b.Omega for b in kets] for a in kets], dtype=float)
    u = [np.einsum("ap,p,bp->ab", psi.conj(), W * c, psi) * spin for c in n_vec]
    axis = Geometry(theta=theta).axis()
    T = np.eye(3) - 3 * np.outer(axis, axis)
    V = sum(T[i, j] * np.kron(u[i], u[j]) for i in range(3) for j in range(3))
    got = build_vdd(Geometry(theta=theta), J_max)
    assert np.abs(V.imag).max() < 1e-12
    assert np.allclose(got, V.real, atol=1e-8, rtol=0)


def test_dimer_tensor_sum_at_zero_coupling():
    cfg = DimerConfig(fields=FieldPoint.inhomogeneous(2.63, 1.1), xi_over_B=0.0)
    w = np.linalg.eigvalsh(build_dimer_hamiltonian(cfg, 3.5))
    w1 = np.linalg.eigvalsh(build_single_hamiltonian(NAO, 0.0, 2.63, 3.5))
    w2 = np.linalg.eigvalsh(build_single_hamiltonian(NAO, 0.0, 2.893, 3.5))
    assert np.allclose(w, np.sort(np.add.outer(w1, w2).ravel()), atol=1e-10, rtol=0)


def test_dimer_hermitian():
    cfg = DimerConfig(fields=FieldPoint.inhomogeneous(1.0, 1.15, 0.5), xi_over_B=1e-3)
    H = build_dimer_hamiltonian(cfg, 3.5)
    assert np.array_equal(H, H.T)


def test_dimer_matches_decoupled_oracle():
    cfg = DimerConfig(fields=FieldPoint.inhomogeneous(1.0, 1.1), xi_over_B=1e-3)
    a = np.linalg.eigvalsh(build_dimer_hamiltonian(cfg, 3.5))[:8]
    b = np.linalg.eigvalsh(build_decoupled_oracle(cfg, 4))[:8]
    assert np.allclose(a, b, atol=1e-10, rtol=0)


def test_invalid_configuration():
    with pytest.raises(HamiltonianError):
        Geometry(theta=4.0)
    with pytest.raises(HamiltonianError):
        DimerConfig(xi_over_B=-1.0)
    with pytest.raises(HamiltonianError):
        DimerConfig(params1=NAO, params2=MoleculeParams(B=0.5))
