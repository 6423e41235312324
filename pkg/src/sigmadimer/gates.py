"""CNOT Schemes I and II as ramp / pi-pulse / ramp-back protocols.

Ramps are modelled by adiabatic state tracking and pulses by ideal population
swaps between two tracked states, so a protocol is a permutation of the four
computational amplitudes. What is computed, not assumed, is which tracked
states the ramp connects, the pulse frequency, its separation from every
other transition of the four-level system, and the transition moments.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import __version__
from .hamiltonian import DimerConfig, Geometry, single_operators
from .qubits import (
    BELL,
    LABELS,
    EffectiveQubitState,
    concurrence,
    concurrence_profile,
    product_model,
    single_qubit_states,
    solve_effective,
    solve_single,
)
from .spectra import DimerSweep, PerturbativeCoupling, TrackedSpectrum, sweep_track, transition_frequencies
from .units import NAO, FieldPoint, MoleculeParams, cm1_to_ghz, field_from_eta_m, format_frequency

CNOT_CONTROL2 = (0, 3, 2, 1)  # output index of each input label under CNOT, control = molecule 2
CNOT_CONTROL1 = (0, 1, 3, 2)


class GateError(RuntimeError):
    pass


@dataclass(frozen=True)
class GateProtocol:
    scheme: str = "II"
    control: int = 2
    params: MoleculeParams = NAO
    ratio: float = 1.1
    eta_el: float = 0.0
    eta_start: float = 2.63  # operating point (computational basis defined here)
    eta_target: float = 2.64  # Scheme II ramp end, beyond the avoided crossing
    xi_over_B: float = 5.39e-6
    geometry: Geometry = field(default_factory=Geometry)
    J_max: float = 3.5
    grid_step: float = 0.001
    workers: int = 1
    min_resolvable_hz: float = 1e3
    zero_field_points_per_decade: int = 10
    zero_field_floor: float = 1e-16

    def __post_init__(self) -> None:
        if self.scheme not in ("I", "II"):
            raise GateError(f"unknown scheme {self.scheme!r}")
        if self.control not in (1, 2):
            raise GateError("control must be molecule 1 or 2")
        if self.grid_step <= 0:
            raise GateError("grid_step must be positive")

    def config(self, eta: float) -> DimerConfig:
        return DimerConfig(self.params, self.params, FieldPoint.inhomogeneous(eta, self.ratio, self.eta_el),
                           self.xi_over_B, self.geometry)


@dataclass
class GateReport:
    scheme: str
    control: int
    fields: dict
    frequencies: dict
    pulse: dict
    dipoles: dict
    resolvability: dict
    truth_table: dict
    input_amplitudes: list
    output_amplitudes: list
    verdict: dict
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = __version__
        return d

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(f"{float(x):.12g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def pi_pulse_swap(amplitudes: Sequence[complex], i: int, j: int) -> np.ndarray:
    """Ideal pi pulse: exchange the amplitudes of tracked states i and j."""
    amp = np.array(amplitudes, dtype=complex if np.iscomplexobj(amplitudes) else float)
    if amp.shape != (4,):
        raise GateError("four amplitudes expected")
    if not (0 <= i < 4 and 0 <= j < 4) or i == j:
        raise GateError(f"invalid swap indices ({i}, {j})")
    amp[[i, j]] = amp[[j, i]]
    return amp


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Column k has a single 1 in row perm[k]."""
    P = np.zeros((4, 4))
    for k, p in enumerate(perm):
        P[p, k] = 1.0
    return P


def all_transitions(energies: Sequence[float]) -> dict[tuple[int, int], float]:
    """All six level differences (same units as input) keyed by rank pairs."""
    e = np.sort(np.asarray(energies, dtype=float))
    return {(i, j): float(e[j] - e[i]) for i, j in combinations(range(4), 2)}


def resolvability(energies_B: Sequence[float], pair: tuple[int, int], B: float, min_hz: float) -> dict:
    """Separation of the selected transition from the other five (Hz)."""
    tr = {k: cm1_to_ghz(v * B) * 1e9 for k, v in all_transitions(energies_B).items()}
    sel = tr[tuple(sorted(pair))]
    others = {k: v for k, v in tr.items() if k != tuple(sorted(pair))}
    sep = min(abs(sel - v) for v in others.values())
    return {
        "selected_hz": sel,
        "min_separation_hz": sep,
        "threshold_hz": min_hz,
        "resolvable": bool(sel >= min_hz and sep >= min_hz),
    }


def transition_dipole(vec_i: np.ndarray, vec_j: np.ndarray, J_max: float = 3.5) -> dict[int, float]:
    """<i| C_q(1) + C_q(2) |j> for q = -1, 0, 1, in units of the dipole moment."""
    C = single_operators(J_max).C
    n = C[0].shape[0]
    if vec_i.size != n * n or vec_j.size != n * n:
        raise GateError("state vectors do not match the pair basis")
    A = vec_i.reshape(n, n)
    Bm = vec_j.reshape(n, n)
    return {q: float(np.sum(A * (C[q] @ Bm)) + np.sum(A * (Bm @ C[q].T))) for q in (-1, 0, 1)}


def magnetic_transition_moment(vec_i: np.ndarray, vec_j: np.ndarray, J_max: float = 3.5) -> dict[int, float]:
    """<i| S_q(1) + S_q(2) |j>, in units of g_S mu_B."""
    S = single_operators(J_max).S
    n = S[0].shape[0]
    A = vec_i.reshape(n, n)
    Bm = vec_j.reshape(n, n)
    return {q: float(np.sum(A * (S[q] @ Bm)) + np.sum(A * (Bm @ S[q].T))) for q in (-1, 0, 1)}


def _input_vector(inp) -> np.ndarray:
    amp = np.asarray(inp.amplitudes if isinstance(inp, EffectiveQubitState) else inp, dtype=float)
    if amp.shape != (4,) or abs(np.linalg.norm(amp) - 1) > 1e-9:
        raise GateError("input must be four normalized amplitudes")
    return amp


def _truth_table(perm: Sequence[int], expected: Sequence[int]) -> dict:
    table = {LABELS[k]: LABELS[perm[k]] for k in range(4)}
    return {"map": table, "expected": {LABELS[k]: LABELS[expected[k]] for k in range(4)},
            "is_cnot": list(perm) == list(expected)}


def _fields(p: GateProtocol, extra: dict) -> dict:
    out = {
        "eta_m1_start": p.eta_start, "eta_m2_start": p.ratio * p.eta_start,
        "H1_start_T": field_from_eta_m(p.params, p.eta_start),
        "H2_start_T": field_from_eta_m(p.params, p.ratio * p.eta_start),
        "ratio": p.ratio, "eta_el": p.eta_el, "xi_over_B": p.xi_over_B,
        "geometry": {"phi": p.geometry.phi, "theta": p.geometry.theta, "chi": p.geometry.chi},
        "J_max": p.J_max, "B_cm-1": p.params.B, "gamma_cm-1": p.params.gamma, "mu_D": p.params.mu,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Scheme I


def _zero_field_grid(p: GateProtocol) -> np.ndarray:
    decades = math.log10(p.eta_start / p.zero_field_floor)
    n = int(math.ceil(decades * p.zero_field_points_per_decade)) + 1
    return np.concatenate([p.eta_start * np.logspace(0, -decades, n), [0.0]])


def _label_tracks(amplitudes: np.ndarray) -> list[int]:
    """Computational label of each tracked effective state at the operating point."""
    labels = [int(np.argmax(amplitudes[:, k] ** 2)) for k in range(4)]
    if sorted(labels) != [0, 1, 2, 3]:
        raise GateError("operating-point states are not separable into computational labels")
    if min(float(amplitudes[labels[k], k] ** 2) for k in range(4)) < 0.99:
        raise GateError("operating-point eigenstates are entangled; computational basis ill-defined")
    return labels


def _bell_name(vec: np.ndarray) -> tuple[str, float]:
    ov = {k: float(np.dot(v, vec) ** 2) for k, v in BELL.items()}
    name = max(ov, key=ov.get)
    return name, ov[name]


def run_scheme1(inp, protocol: GateProtocol | None = None) -> GateReport:
    """Ramp to zero field, pi pulse between two Bell tracks, ramp back."""
    p = protocol or GateProtocol(scheme="I")
    if p.scheme != "I":
        p = GateProtocol(**{**asdict_shallow(p), "scheme": "I"})
    amp_in = _input_vector(inp)
    grid = _zero_field_grid(p)
    down = concurrence_profile(grid, p.ratio, p.xi_over_B, p.params, p.J_max, p.geometry, p.eta_el)
    labels = _label_tracks(down.amplitudes[0])
    track_of = {lab: k for k, lab in enumerate(labels)}
    up = concurrence_profile(grid[::-1], p.ratio, p.xi_over_B, p.params, p.J_max, p.geometry, p.eta_el)
    # Match the zero-field states of both sweeps, then read off where the return ramp lands.
    ov = np.abs(down.amplitudes[-1].T @ up.amplitudes[0])
    up_of_down = np.argmax(ov, axis=1)
    if len(set(up_of_down.tolist())) != 4:
        raise GateError("zero-field states of the two ramps do not match one to one")
    final_labels = [int(np.argmax(up.amplitudes[-1][:, up_of_down[k]] ** 2)) for k in range(4)]

    target = 1 if p.control == 2 else 2
    a, b = track_of[target], track_of[3]
    E0 = down.energies[-1]
    bell = {LABELS[labels[k]]: dict(zip(("state", "overlap"), _bell_name(down.amplitudes[-1][:, k])))
            for k in range(4)}
    ranks = np.argsort(np.argsort(E0))
    res = resolvability(E0, (int(ranks[a]), int(ranks[b])), p.params.B, p.min_resolvable_hz)
    # Levels closer than 1e-6 of the zero-field spread cannot be addressed separately.
    degenerate = bool(np.min(np.abs(np.diff(np.sort(E0)))) < 1e-6 * np.ptp(E0))

    # Protocol map: ramp (track k keeps its amplitude), swap, ramp back.
    perm = []
    for lab in range(4):
        k = track_of[lab]
        k2 = {a: b, b: a}.get(k, k)
        perm.append(final_labels[k2])
    expected = CNOT_CONTROL2 if p.control == 2 else CNOT_CONTROL1
    amp_out = permutation_matrix(perm) @ amp_in

    zf = {}
    for k in range(4):
        vec = down.amplitudes[-1][:, k]
        zf[LABELS[labels[k]]] = {"energy_B": float(E0[k]), "concurrence": concurrence(vec),
                                 "amplitudes": dict(zip(LABELS, vec.tolist()))}
    q1 = single_qubit_states(p.params, 0.0, 0.0, p.J_max)
    full = {}
    for k in (a, b):
        vec = down.amplitudes[-1][:, k]
        full[k] = sum(vec[i] * np.kron(x, y) for i, (x, y) in enumerate(
            (x, y) for x in (q1.zero, q1.one) for y in (q1.zero, q1.one)))
    dip = transition_dipole(full[a], full[b], p.J_max)
    mag = magnetic_transition_moment(full[a], full[b], p.J_max)

    freq_ghz = cm1_to_ghz(abs(E0[a] - E0[b]) * p.params.B)
    feasible = res["resolvable"] and not degenerate
    return GateReport(
        scheme="I",
        control=p.control,
        fields=_fields(p, {"ramp_end_eta_m1": 0.0}),
        frequencies={"omega_03": format_frequency(freq_ghz), "omega_03_GHz": freq_ghz, "zero_field_states": zf},
        pulse={"tracks": [LABELS[target], "11"], "bell_states": [bell[LABELS[target]], bell["11"]],
               "frequency_GHz": freq_ghz},
        dipoles={"electric_mu": dip, "magnetic_gS_muB": mag},
        resolvability={**res, "degenerate_levels_at_zero_field": degenerate},
        truth_table=_truth_table(perm, expected),
        input_amplitudes=amp_in.tolist(),
        output_amplitudes=amp_out.tolist(),
        verdict={"cnot": list(perm) == list(expected), "feasible": bool(feasible),
                 "reason": "resolvable" if feasible else "zero-field splittings unresolvable at this coupling"},
        diagnostics={"bell_connection": bell, "ramp_points": int(grid.size)},
    )


def asdict_shallow(p: GateProtocol) -> dict:
    return {f: getattr(p, f) for f in p.__dataclass_fields__}


# ---------------------------------------------------------------------------
# Scheme II


def dimer_qubit_seed(p: GateProtocol, eta: float):
    """Seed selector: for each label 00, 01, 10, 11 the eigenvector with most weight on it."""
    q1 = single_qubit_states(p.params, p.eta_el, eta, p.J_max)
    q2 = single_qubit_states(p.params, p.eta_el, p.ratio * eta, p.J_max)
    Q = np.column_stack([np.kron(a, b) for a in (q1.zero, q1.one) for b in (q2.zero, q2.one)])

    def seed(sol):
        w = (Q.T @ sol.vectors) ** 2
        cols = [int(np.argmax(w[k])) for k in range(4)]
        if len(set(cols)) != 4 or min(w[k, cols[k]] for k in range(4)) < 0.9:
            raise GateError("could not identify the four computational states")
        return cols

    return seed


def ramp_tracks(p: GateProtocol, start: float, end: float) -> TrackedSpectrum:
    n = int(round(abs(end - start) / p.grid_step)) + 1
    grid = np.linspace(start, end, max(n, 2))
    sweep = DimerSweep(p.config(0.0), p.J_max, p.ratio, p.eta_el)
    return sweep_track(grid, sweep, 4, dimer_qubit_seed(p, start), workers=p.workers,
                       coupling_estimator=PerturbativeCoupling(sweep))


def refined_energies(p: GateProtocol, eta: float, vectors: np.ndarray) -> np.ndarray:
    """Energies of tracked dimer states from a second-order product-state model.

    Each tracked vector is matched to its dominant product eigenstate; the
    quasi-degenerate model over those products is solved in extended
    precision. This resolves sub-Hz splittings that the full diagonalization
    cannot.
    """
    cfg = p.config(eta)
    f = cfg.fields
    e1 = solve_single(cfg.params1, f.eta_el[0], f.eta_m[0], p.J_max)
    e2 = solve_single(cfg.params2, f.eta_el[1], f.eta_m[1], p.J_max)
    n = e1.values.size
    model = []
    for k in range(vectors.shape[1]):
        c = vectors[:, k].reshape(n, n)
        w = (e1.vectors.T @ c @ e2.vectors) ** 2
        i1, i2 = np.unravel_index(np.argmax(w), w.shape)
        if w[i1, i2] < 0.9:
            raise GateError("tracked state is not close to a product state")
        model.append((int(i1), int(i2)))
    heff = product_model(cfg, p.J_max, model, e1, e2)
    vals, vecs = solve_effective(heff.matrix)
    out = np.empty(len(model))
    for k in range(len(model)):
        out[int(np.argmax(vecs[:, k] ** 2))] = vals[k]
    return out


def _freq_block(energies_B: np.ndarray, B: float) -> dict:
    f = transition_frequencies(energies_B, B)
    return {
        "omega_em1_GHz": f.em1, "omega_em2_GHz": f.em2, "omega_em3_GHz": f.em3,
        "delta_omega_GHz": f.delta,
        "omega_em1": format_frequency(f.em1), "omega_em2": format_frequency(f.em2),
        "omega_em3": format_frequency(f.em3), "delta_omega": format_frequency(f.delta),
    }


def run_scheme2(inp, protocol: GateProtocol | None = None) -> GateReport:
    """Ramp past the avoided crossing, pi pulse on the top track, ramp back."""
    p = protocol or GateProtocol()
    amp_in = _input_vector(inp)
    fwd = ramp_tracks(p, p.eta_start, p.eta_target)
    if not fwd.crossings:
        raise GateError(f"no avoided crossing between eta_m = {p.eta_start} and {p.eta_target}")
    E_end = fwd.energies[-1]
    ranks = np.argsort(np.argsort(E_end))  # rank of each track (label order 00, 01, 10, 11)
    track_at_rank = np.argsort(E_end)
    top = int(track_at_rank[3])
    partner_rank = 2 if p.control == 2 else 1
    other = int(track_at_rank[partner_rank])

    B = p.params.B
    refined_start = refined_energies(p, p.eta_start, fwd.initial_vectors)
    refined_end = refined_energies(p, p.eta_target, fwd.final_vectors)
    freq_start = _freq_block(fwd.energies[0], B)
    freq_end = _freq_block(E_end, B)
    fr_start = _freq_block(refined_start, B)
    fr_end = _freq_block(refined_end, B)
    sel_ghz = cm1_to_ghz((E_end[top] - E_end[other]) * B)
    res = resolvability(refined_end, (partner_rank, 3), B, p.min_resolvable_hz)
    res_before = resolvability(refined_start, (partner_rank, 3), B, p.min_resolvable_hz)

    # Ramp back retraces the tracks, so each track returns to its label.
    perm = list(range(4))
    perm[top], perm[other] = other, top
    expected = CNOT_CONTROL2 if p.control == 2 else CNOT_CONTROL1
    amp_out = permutation_matrix(perm) @ amp_in

    dip = transition_dipole(fwd.final_vectors[:, top], fwd.final_vectors[:, other], p.J_max)
    mag = magnetic_transition_moment(fwd.final_vectors[:, top], fwd.final_vectors[:, other], p.J_max)
    crossings = [
        {"interval": list(c.interval), "center": c.center, "gap_B": c.gap,
         "gap": format_frequency(cm1_to_ghz(c.gap * B)), "tracks": [LABELS[t] if t >= 0 else "untracked" for t in c.tracks]}
        for c in fwd.crossings
    ]
    selector = "omega_em3" if p.control == 2 else "omega_em2+omega_em3"
    feasible = res["resolvable"]
    return GateReport(
        scheme="II",
        control=p.control,
        fields=_fields(p, {"eta_m1_target": p.eta_target, "eta_m2_target": p.ratio * p.eta_target,
                           "H1_target_T": field_from_eta_m(p.params, p.eta_target)}),
        frequencies={"before": freq_start, "after": freq_end, "before_refined": fr_start, "after_refined": fr_end},
        pulse={"selector": selector, "tracks": [LABELS[other], LABELS[top]], "frequency_GHz": sel_ghz,
               "frequency": format_frequency(sel_ghz)},
        dipoles={"electric_mu": dip, "magnetic_gS_muB": mag},
        resolvability={"after": res, "before": res_before},
        truth_table=_truth_table(perm, expected),
        input_amplitudes=amp_in.tolist(),
        output_amplitudes=amp_out.tolist(),
        verdict={"cnot": list(perm) == list(expected), "feasible": bool(feasible),
                 "reason": "pulse resolvable after the avoided crossing" if feasible else "pulse collides with another transition"},
        diagnostics={"avoided_crossings": crossings, "ramp_points": int(fwd.grid.size),
                     "track_ranks_after": {LABELS[k]: int(ranks[k]) for k in range(4)},
                     "min_overlap": float(fwd.min_overlaps.min())},
    )
