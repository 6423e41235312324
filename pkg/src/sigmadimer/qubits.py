"""Qubit states, the effective 4x4 Hamiltonian and concurrence.

At zero electric field the qubit states are pure N = 0, so the dipole-dipole
operator has no matrix elements inside the computational subspace and a bare
projection of the dimer Hamiltonian is exactly diagonal. The entangling
couplings arise at second order through the rotationally excited states and
are captured by a quasi-degenerate (Loewdin) effective Hamiltonian built in
the product eigenbasis of the two molecules. Both constructions are provided.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .hamiltonian import DimerConfig, Geometry, build_single_hamiltonian, build_vdd, m_blocks
from .spectra import fix_signs
from .units import NAO, FieldPoint, MoleculeParams, cm1_to_ghz

LABELS = ("00", "01", "10", "11")
SIGMA_Y2 = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float)
BELL = {
    "Phi+": np.array([1, 0, 0, 1]) / math.sqrt(2),
    "Phi-": np.array([1, 0, 0, -1]) / math.sqrt(2),
    "Psi+": np.array([0, 1, 1, 0]) / math.sqrt(2),
    "Psi-": np.array([0, 1, -1, 0]) / math.sqrt(2),
}
ZZ = np.diag([1.0, -1.0, -1.0, 1.0])
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=float)


class QubitError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Single molecule


@dataclass(frozen=True)
class SingleEigensystem:
    """M-resolved eigenstates of one molecule, ascending in energy."""

    values: np.ndarray
    vectors: np.ndarray
    twice_M: np.ndarray


def solve_single(params: MoleculeParams, eta_el: float, eta_m: float, J_max: float) -> SingleEigensystem:
    """Diagonalize block by block in M so every eigenvector has a definite M."""
    H = build_single_hamiltonian(params, eta_el, eta_m, J_max)
    n = H.shape[0]
    vals, vecs, ms = [], [], []
    for tm, idx in m_blocks(J_max).items():
        w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
        full = np.zeros((n, idx.size))
        full[idx] = v
        vals.append(w)
        vecs.append(full)
        ms.append(np.full(idx.size, tm))
    vals = np.concatenate(vals)
    order = np.argsort(vals, kind="stable")
    return SingleEigensystem(vals[order], fix_signs(np.hstack(vecs)[:, order]), np.concatenate(ms)[order])


@dataclass(frozen=True)
class QubitPair:
    """|0> (M = -1/2) and |1> (M = +1/2), adiabatically connected to N = 0."""

    zero: np.ndarray
    one: np.ndarray
    E0: float
    E1: float
    eta_el: float
    eta_m: float
    J_max: float

    @property
    def splitting(self) -> float:
        """E1 - E0 in units of B."""
        return self.E1 - self.E0

    def vectors(self) -> np.ndarray:
        return np.column_stack([self.zero, self.one])


def _block_track(H_of_t, idx: np.ndarray, start: int, max_step: float, min_step: float) -> tuple[float, np.ndarray]:
    """Follow one eigenvector of a block from t = 0 to 1 by maximal overlap."""
    w, v = np.linalg.eigh(H_of_t(0.0)[np.ix_(idx, idx)])
    vec = v[:, start]
    t, step = 0.0, max_step
    while t < 1.0:
        t_new = min(1.0, t + step)
        w, v = np.linalg.eigh(H_of_t(t_new)[np.ix_(idx, idx)])
        ov = np.abs(vec @ v)
        order = np.argsort(ov)
        best, second = ov[order[-1]], ov[order[-2]] if ov.size > 1 else 0.0
        if best < 0.9 or second > 0.3:
            step /= 2
            if step < min_step:
                raise QubitError(f"qubit label tracking failed near t={t:.6g}")
            continue
        vec = v[:, order[-1]] * np.sign(vec @ v[:, order[-1]])
        energy = w[order[-1]]
        t = t_new
        step = min(max_step, 2 * step)
    if t == 0.0:
        energy = w[start]
    return float(energy), vec


def single_qubit_states(
    params: MoleculeParams, eta_el: float, eta_m: float, J_max: float = 3.5,
    max_step: float = 0.05, min_step: float = 1e-7,
) -> QubitPair:
    """Qubit states at the given site fields, labelled by adiabatic connection.

    Each M = -+1/2 block is followed from zero field, where its lowest state
    is the N = 0, J = 1/2 level; the fields are switched on along a straight
    line. Level crossings with the N = 1 manifold (exact at zero electric
    field) are passed diabatically.
    """
    if eta_el < 0 or eta_m < 0:
        raise QubitError("field parameters must be non-negative")
    blocks = m_blocks(J_max)
    n = sum(b.size for b in blocks.values())
    out = []
    for tm in (-1, 1):
        idx = blocks[tm]
        H_of_t = lambda t: build_single_hamiltonian(params, t * eta_el, t * eta_m, J_max)
        path = max(eta_el, eta_m)
        step = max_step / path if path > 0 else 1.0
        E, v = _block_track(H_of_t, idx, 0, min(1.0, step), min_step)
        full = np.zeros(n)
        full[idx] = v
        full = fix_signs(full[:, None])[:, 0]
        out.append((E, full))
    (E0, zero), (E1, one) = out
    return QubitPair(zero, one, E0, E1, float(eta_el), float(eta_m), float(J_max))


def qubit_columns(eig: SingleEigensystem, pair: QubitPair) -> tuple[int, int]:
    """Columns of ``eig`` holding |0> and |1>."""
    cols = []
    for vec in (pair.zero, pair.one):
        ov = np.abs(vec @ eig.vectors)
        c = int(np.argmax(ov))
        if ov[c] < 0.99:
            raise QubitError(f"qubit state not found in eigensystem (overlap {ov[c]:.3f})")
        cols.append(c)
    return cols[0], cols[1]


# ---------------------------------------------------------------------------
# Effective Hamiltonians


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray  # units of B, over the model states
    product_energies: np.ndarray
    method: str
    leakage_bound: float  # ||(1-P) H P||^2 / gap, units of B
    model: tuple = LABELS


def effective_hamiltonian_4x4(H: np.ndarray, q1: QubitPair, q2: QubitPair) -> np.ndarray:
    """Direct projection <q_a q_b| H |q_c q_d> onto the computational basis."""
    n1, n2 = q1.zero.size, q2.zero.size
    if H.shape != (n1 * n2, n1 * n2):
        raise QubitError(f"dimension mismatch: H {H.shape} vs qubits {n1}x{n2}")
    Q = np.column_stack([np.kron(a, b) for a in (q1.zero, q1.one) for b in (q2.zero, q2.one)])
    P = Q.T @ H @ Q
    return 0.5 * (P + P.T)


def product_model(
    config: DimerConfig, J_max: float, model: Sequence[tuple[int, int]],
    eig1: SingleEigensystem, eig2: SingleEigensystem,
) -> EffectiveHamiltonian:
    """Second-order quasi-degenerate Hamiltonian over product eigenstates.

    ``H_ab = E_a d_ab + xi V_ab + (xi^2 / 2) sum_k V_ak V_kb [1/(E_a - E_k) + 1/(E_b - E_k)]``
    with k running over all product states outside the model space.
    """
    n2 = eig2.values.size
    flat = np.array([i1 * n2 + i2 for i1, i2 in model])
    E0 = (eig1.values[:, None] + eig2.values[None, :]).ravel()
    U = np.kron(eig1.vectors, eig2.vectors)
    V = build_vdd(config.geometry, J_max)
    rows = (U[:, flat].T @ V) @ U
    xi = config.xi_over_B
    Em = E0[flat]
    mask = np.ones(E0.size, bool)
    mask[flat] = False
    Vm = rows[:, mask]
    Ek = E0[mask]
    inv = 1.0 / (Em[:, None] - Ek[None, :])
    m = flat.size
    H = np.diag(Em) + xi * rows[:, flat]
    for a in range(m):
        for b in range(a, m):
            val = 0.5 * xi * xi * np.sum(Vm[a] * Vm[b] * (inv[a] + inv[b]))
            H[a, b] += val
            if a != b:
                H[b, a] = H[a, b]
    H = 0.5 * (H + H.T)
    gap = float(np.min(np.abs(Em[:, None] - Ek[None, :])))
    leak = float((xi * np.linalg.norm(Vm, 2)) ** 2 / gap) if gap > 0 else math.inf
    return EffectiveHamiltonian(H, Em, "second_order", leak, tuple(model))


def effective_hamiltonian(
    config: DimerConfig, J_max: float = 3.5, method: str = "second_order",
    qubits: tuple[QubitPair, QubitPair] | None = None,
) -> EffectiveHamiltonian:
    """Effective Hamiltonian over {|00>, |01>, |10>, |11>} at the config's fields."""
    f = config.fields
    if qubits is None:
        qubits = (
            single_qubit_states(config.params1, f.eta_el[0], f.eta_m[0], J_max),
            single_qubit_states(config.params2, f.eta_el[1], f.eta_m[1], J_max),
        )
    q1, q2 = qubits
    if method == "projection":
        from .hamiltonian import build_dimer_hamiltonian

        H = build_dimer_hamiltonian(config, J_max)
        P = effective_hamiltonian_4x4(H, q1, q2)
        Q = np.column_stack([np.kron(a, b) for a in (q1.zero, q1.one) for b in (q2.zero, q2.one)])
        R = H @ Q - Q @ P
        E = np.array([q1.E0 + q2.E0, q1.E0 + q2.E1, q1.E1 + q2.E0, q1.E1 + q2.E1])
        w = np.linalg.eigvalsh(H)
        outside = np.setdiff1d(np.arange(w.size), np.argsort(np.abs(w[:, None] - np.diag(P)[None, :]).min(axis=1))[:4])
        gap = float(np.min(np.abs(w[outside][:, None] - np.diag(P)[None, :])))
        return EffectiveHamiltonian(P, E, "projection", float(np.linalg.norm(R, 2) ** 2 / gap))
    if method != "second_order":
        raise QubitError(f"unknown method {method!r}")
    eig1 = solve_single(config.params1, f.eta_el[0], f.eta_m[0], J_max)
    eig2 = solve_single(config.params2, f.eta_el[1], f.eta_m[1], J_max)
    a0, a1 = qubit_columns(eig1, q1)
    b0, b1 = qubit_columns(eig2, q2)
    return product_model(config, J_max, [(a0, b0), (a0, b1), (a1, b0), (a1, b1)], eig1, eig2)


# ---------------------------------------------------------------------------
# States and concurrence


@dataclass(frozen=True)
class EffectiveQubitState:
    amplitudes: np.ndarray  # (a, b, c, d) over |00>, |01>, |10>, |11>
    energy: float = 0.0

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes)
        if amp.shape != (4,):
            raise QubitError("a two-qubit state has four amplitudes")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def concurrence(self) -> float:
        return concurrence(self)

    def bell_overlaps(self) -> dict[str, float]:
        return {k: float(abs(np.vdot(v, self.amplitudes)) ** 2) for k, v in BELL.items()}


def _check_norm(psi: np.ndarray, tol: float = 1e-9) -> None:
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise QubitError(f"state not normalized (norm {np.linalg.norm(psi):.12g})")


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """(sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    return SIGMA_Y2 @ rho.conj() @ SIGMA_Y2


def spin_flip_swapped(psi: np.ndarray) -> np.ndarray:
    """Spin-flipped pure state built by exchanging |00> <-> |11>, |01> <-> |10> with signs."""
    a, b, c, d = np.conj(psi)
    return np.array([-d, c, b, -a])


def wootters_concurrence(rho: np.ndarray, flipped: np.ndarray | None = None) -> float:
    """C = max(0, l1 - l2 - l3 - l4), l_i = sqrt of eigenvalues of rho rho~.

    The l_i are evaluated as singular values of ``W^T (sigma_y x sigma_y) W``
    with ``rho = W W^dagger``; this is algebraically identical and avoids
    square roots of roundoff-level eigenvalues for low-rank rho.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise QubitError("two-qubit density matrix required")
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = w > 16 * np.finfo(float).eps * max(w.max(), 1.0)
    W = v[:, keep] * np.sqrt(w[keep])
    tau = W.T @ SIGMA_Y2 @ W
    lam = np.sort(np.linalg.svd(tau, compute_uv=False))[::-1]
    lam = np.concatenate([lam, np.zeros(4 - lam.size)])
    if flipped is not None:
        # Cross-check against the explicit rho rho~ spectrum.
        ev = np.sort(np.abs(np.linalg.eigvals(rho @ flipped)))[::-1]
        if abs(ev[0] - lam[0] ** 2) > 1e-8:
            raise QubitError("spin-flip routes disagree")
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence(state: EffectiveQubitState | Sequence[complex]) -> float:
    """Wootters concurrence of a pure two-qubit state."""
    psi = np.asarray(state.amplitudes if isinstance(state, EffectiveQubitState) else state, dtype=complex)
    _check_norm(psi)
    return wootters_concurrence(np.outer(psi, psi.conj()))


def concurrence_swapped(state: EffectiveQubitState | Sequence[complex]) -> float:
    """Pure-state concurrence |<psi|psi~>| with psi~ from the swapped-basis rebuild."""
    psi = np.asarray(state.amplitudes if isinstance(state, EffectiveQubitState) else state, dtype=complex)
    _check_norm(psi)
    return float(abs(np.vdot(psi, spin_flip_swapped(psi))))


def concurrence_analytic(a: float, b: float, c: float, d: float) -> float:
    """max(0, 2|bc - ad|) for real amplitudes."""
    return max(0.0, 2 * abs(b * c - a * d))


def _resolve_degenerate(values: np.ndarray, vectors: np.ndarray, tol: float) -> np.ndarray:
    """Inside degenerate clusters pick eigenvectors of ZZ parity, then of SWAP."""
    vectors = vectors.copy()
    i = 0
    n = values.size
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] - values[j] <= tol:
            j += 1
        if j > i and vectors.shape[0] == 4:
            sub = vectors[:, i:j + 1]
            for op in (ZZ, SWAP):
                m = sub.T @ op @ sub
                w, u = np.linalg.eigh(0.5 * (m + m.T))
                sub = sub @ u
            vectors[:, i:j + 1] = sub
        i = j + 1
    return fix_signs(vectors)


def solve_effective(Heff: np.ndarray, dps: int = 40, degeneracy_tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a small real symmetric matrix in extended precision.

    The diagonal is shifted by its mean first so that couplings many orders
    below the diagonal survive intact. Levels closer than ``degeneracy_tol``
    (default 1e-6 of the largest coupling) are treated as degenerate.
    """
    Heff = np.asarray(Heff, dtype=float)
    if degeneracy_tol is None:
        off = np.abs(Heff - np.diag(np.diag(Heff)))
        degeneracy_tol = 1e-6 * float(off.max()) if off.size else 0.0
    shift = float(np.mean(np.diag(Heff)))
    with mpmath.workdps(dps):
        M = mpmath.matrix((Heff - shift * np.eye(Heff.shape[0])).tolist())
        E, Q = mpmath.eigsy(M)
        vals = np.array([float(x) for x in E])
        vecs = np.array([[float(Q[r, c]) for c in range(Q.cols)] for r in range(Q.rows)])
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = _resolve_degenerate(vals, vecs, degeneracy_tol)
    return vals + shift, vecs


def effective_states(Heff: EffectiveHamiltonian | np.ndarray) -> list[EffectiveQubitState]:
    """The four eigenstates of an effective Hamiltonian, ascending in energy."""
    M = Heff.matrix if isinstance(Heff, EffectiveHamiltonian) else np.asarray(Heff)
    vals, vecs = solve_effective(M)
    return [EffectiveQubitState(vecs[:, k], float(vals[k])) for k in range(vals.size)]


# ---------------------------------------------------------------------------
# Profiles along a field sweep


@dataclass
class ConcurrenceProfile:
    grid: np.ndarray
    energies: np.ndarray  # (G, 4), units of B
    amplitudes: np.ndarray  # (G, 4, 4): grid, component, track
    concurrences: np.ndarray  # (G, 4)
    settings: dict = field(default_factory=dict)

    def state(self, i: int, k: int) -> EffectiveQubitState:
        return EffectiveQubitState(self.amplitudes[i, :, k], float(self.energies[i, k]))

    def to_csv(self, B: float) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eta_m1"] + [f"C{k + 1}" for k in range(4)] + [f"E{k + 1}_GHz" for k in range(4)])
        for i, x in enumerate(self.grid):
            row = [f"{x:.12g}"] + [f"{c:.12g}" for c in self.concurrences[i]]
            row += [f"{cm1_to_ghz(e * B):.12g}" for e in self.energies[i]]
            w.writerow(row)
        return buf.getvalue()

    def bell_report(self, indices: Sequence[int] | None = None) -> list[dict]:
        out = []
        for i in indices if indices is not None else range(self.grid.size):
            states = []
            for k in range(4):
                s = self.state(i, k)
                states.append({
                    "track": k + 1,
                    "energy_B": float(s.energy),
                    "amplitudes": dict(zip(LABELS, (float(x) for x in s.amplitudes))),
                    "bell_overlaps": s.bell_overlaps(),
                    "concurrence": float(s.concurrence),
                })
            out.append({"eta_m1": float(self.grid[i]), "states": states})
        return out


def _match_tracks(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    ov = np.abs(prev.T @ new)
    K = ov.shape[0]
    cols = np.full(K, -1)
    work = ov.copy()
    for _ in range(K):
        r, c = np.unravel_index(np.argmax(work), work.shape)
        cols[r] = c
        work[r, :] = -1
        work[:, c] = -1
    return cols


def concurrence_profile(
    grid: Sequence[float],
    ratio: float = 1.0,
    xi_over_B: float = 1e-5,
    params: MoleculeParams = NAO,
    J_max: float = 3.5,
    geometry: Geometry = Geometry(),
    eta_el: float = 0.0,
    method: str = "second_order",
) -> ConcurrenceProfile:
    """Concurrence of the four effective eigenstates along an eta_m sweep.

    Tracks start in ascending energy order at ``grid[0]`` and are threaded by
    maximal overlap of the 4-component eigenvectors.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise QubitError("empty grid")
    energies, amps, concs = [], [], []
    prev = None
    for x in grid:
        cfg = DimerConfig(params, params, FieldPoint.inhomogeneous(x, ratio, eta_el), xi_over_B, geometry)
        heff = effective_hamiltonian(cfg, J_max, method)
        vals, vecs = solve_effective(heff.matrix)
        if prev is not None:
            cols = _match_tracks(prev, vecs)
            vals, vecs = vals[cols], vecs[:, cols]
            vecs = vecs * np.sign(np.sum(prev * vecs, axis=0) + (np.sum(prev * vecs, axis=0) == 0))
        prev = vecs
        energies.append(vals)
        amps.append(vecs)
        concs.append([concurrence(vecs[:, k]) for k in range(4)])
    settings = {
        "ratio": ratio, "xi_over_B": xi_over_B, "J_max": J_max, "eta_el": eta_el,
        "theta": geometry.theta, "method": method,
    }
    return ConcurrenceProfile(grid, np.array(energies), np.array(amps), np.array(concs), settings)
