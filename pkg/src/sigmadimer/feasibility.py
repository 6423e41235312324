"""Spectral broadening from translational spread in a linear field gradient.

Field profile: along the intermolecular axis the magnetic field parameter
varies linearly, eta(z) = eta_1 (1 + (ratio - 1) z / r0), with molecule 1
nominally at z = 0 and molecule 2 at z = r0. The dipole-dipole strength
scales as r^-3.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .gates import GateProtocol, _jsonable, ramp_tracks
from .hamiltonian import DimerConfig
from .qubits import SingleEigensystem, product_model, single_qubit_states, solve_effective, solve_single
from .spectra import transition_frequencies
from .units import FieldPoint, cm1_to_ghz, format_frequency

CONVENTIONS = {"separation": 1.0, "half": 0.5}  # r extremes at r0 -+ factor * delta_r


class FeasibilityError(ValueError):
    pass


@dataclass(frozen=True)
class TrapGeometry:
    r_nm: float = 500.0
    delta_r_nm: float = 30.0
    convention: str = "separation"
    threshold: float = 1e-2  # "much smaller than" as a ratio

    def __post_init__(self) -> None:
        if self.convention not in CONVENTIONS:
            raise FeasibilityError(f"convention must be one of {sorted(CONVENTIONS)}")
        if self.r_nm <= 0 or not 0 <= self.delta_r_nm:
            raise FeasibilityError("need r > 0 and delta_r >= 0")
        if self.r_nm - CONVENTIONS[self.convention] * self.delta_r_nm <= 0:
            raise FeasibilityError("minimum separation r - delta_r must be positive")
        if self.threshold <= 0:
            raise FeasibilityError("threshold must be positive")

    @property
    def separations(self) -> tuple[float, float]:
        d = CONVENTIONS[self.convention] * self.delta_r_nm
        return self.r_nm - d, self.r_nm + d


def eta_profile(eta1: float, ratio: float, r0: float, z: float) -> float:
    return eta1 * (1.0 + (ratio - 1.0) * z / r0)


@dataclass
class BroadeningReport:
    intervals_ghz: dict  # name -> [low, high]
    widths_hz: dict
    dd_only_widths_hz: dict
    field_only_widths_hz: dict
    dominance: dict  # dd width / field width
    nominal_ghz: dict
    cases: dict
    settings: dict
    verdict: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["widths"] = {k: format_frequency(v * 1e-9) for k, v in self.widths_hz.items()}
        d["version"] = __version__
        return d

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["transition", "omega_a_GHz", "omega_b_GHz", "low_GHz", "high_GHz", "width_Hz",
                    "dd_only_width_Hz", "field_only_width_Hz"])
        for k in ("omega_em1", "omega_em2", "omega_em3"):
            lo, hi = self.intervals_ghz[k]
            w.writerow([k] + [f"{x:.12g}" for x in (self.cases["a"][k], self.cases["b"][k], lo, hi,
                                                    self.widths_hz[k], self.dd_only_widths_hz[k],
                                                    self.field_only_widths_hz[k])])
        return buf.getvalue()


def _match_states(nominal: SingleEigensystem, new: SingleEigensystem, cols: list[int]) -> list[int]:
    out = []
    for c in cols:
        ov = np.abs(nominal.vectors[:, c] @ new.vectors)
        k = int(np.argmax(ov))
        if ov[k] < 0.9:
            raise FeasibilityError("single-molecule state lost between trap extremes")
        out.append(k)
    return out


class FourLevelModel:
    """Adiabatic four-level spectrum of the dimer from a product-state model.

    The model spans the four computational products and, past an avoided
    crossing, the product state that crossed into the top track. Its lowest
    four eigenvalues are the tracked levels on either side of the crossing.
    """

    def __init__(self, protocol: GateProtocol, eta1: float):
        self.protocol = protocol
        self.eta1 = eta1
        cfg = protocol.config(eta1)
        f = cfg.fields
        self.eig = (solve_single(cfg.params1, f.eta_el[0], f.eta_m[0], protocol.J_max),
                    solve_single(cfg.params2, f.eta_el[1], f.eta_m[1], protocol.J_max))
        start = protocol.eta_start if eta1 > protocol.eta_start else eta1
        if eta1 > start:
            fwd = ramp_tracks(protocol, start, eta1)
            vecs = fwd.final_vectors
        else:
            vecs = None
        q = [single_qubit_states(cfg.params1 if i == 0 else cfg.params2, f.eta_el[i], f.eta_m[i], protocol.J_max)
             for i in range(2)]
        model = []
        for a in (q[0].zero, q[0].one):
            for b in (q[1].zero, q[1].one):
                i1 = int(np.argmax(np.abs(a @ self.eig[0].vectors)))
                i2 = int(np.argmax(np.abs(b @ self.eig[1].vectors)))
                model.append((i1, i2))
        if vecs is not None:
            n = self.eig[1].values.size
            for k in range(vecs.shape[1]):
                w = (self.eig[0].vectors.T @ vecs[:, k].reshape(-1, n) @ self.eig[1].vectors) ** 2
                i1, i2 = np.unravel_index(np.argmax(w), w.shape)
                if (int(i1), int(i2)) not in model:
                    model.append((int(i1), int(i2)))
        self.model = model

    def levels(self, eta_sites: tuple[float, float], xi_over_B: float) -> np.ndarray:
        p = self.protocol
        fields = FieldPoint(eta_el=(p.eta_el, p.eta_el), eta_m=eta_sites)
        cfg = DimerConfig(p.params, p.params, fields, xi_over_B, p.geometry)
        eig = (solve_single(p.params, p.eta_el, eta_sites[0], p.J_max),
               solve_single(p.params, p.eta_el, eta_sites[1], p.J_max))
        c1 = _match_states(self.eig[0], eig[0], [m[0] for m in self.model])
        c2 = _match_states(self.eig[1], eig[1], [m[1] for m in self.model])
        heff = product_model(cfg, p.J_max, list(zip(c1, c2)), eig[0], eig[1])
        vals, _ = solve_effective(heff.matrix)
        return np.sort(vals)[:4]

    def frequencies(self, eta_sites: tuple[float, float], xi_over_B: float) -> dict[str, float]:
        f = transition_frequencies(self.levels(eta_sites, xi_over_B), self.protocol.params.B)
        return {"omega_em1": f.em1, "omega_em2": f.em2, "omega_em3": f.em3, "delta_omega": f.delta}


def _site_fields(eta1: float, ratio: float, r0: float, r: float) -> tuple[float, float]:
    """Sites placed symmetrically about the nominal midpoint at separation r."""
    z1, z2 = 0.5 * (r0 - r), 0.5 * (r0 + r)
    return eta_profile(eta1, ratio, r0, z1), eta_profile(eta1, ratio, r0, z2)


def _widths(fa: dict, fb: dict) -> dict[str, float]:
    return {k: abs(fa[k] - fb[k]) * 1e9 for k in ("omega_em1", "omega_em2", "omega_em3")}


def composite_broadening(protocol: GateProtocol | None = None, trap: TrapGeometry | None = None,
                         eta1: float | None = None, model: FourLevelModel | None = None) -> BroadeningReport:
    """Frequency intervals of the three transitions between the separation extremes."""
    p = protocol or GateProtocol()
    trap = trap or TrapGeometry()
    eta1 = p.eta_target if eta1 is None else eta1
    model = model or FourLevelModel(p, eta1)
    r0 = trap.r_nm
    xi0 = p.xi_over_B
    nominal_sites = (eta1, p.ratio * eta1)
    nominal = model.frequencies(nominal_sites, xi0)
    cases, dd, fld = {}, {}, {}
    for tag, r in zip(("a", "b"), trap.separations):
        sites = _site_fields(eta1, p.ratio, r0, r)
        xi = xi0 * (r0 / r) ** 3
        cases[tag] = model.frequencies(sites, xi)
        dd[tag] = model.frequencies(nominal_sites, xi)
        fld[tag] = model.frequencies(sites, xi0)
    widths = _widths(cases["a"], cases["b"])
    w_dd = _widths(dd["a"], dd["b"])
    w_fld = _widths(fld["a"], fld["b"])
    dominance = {k: (w_dd[k] / w_fld[k] if w_fld[k] > 0 else float("inf")) for k in widths}
    intervals = {k: sorted([cases["a"][k], cases["b"][k]]) for k in widths}
    rep = BroadeningReport(
        intervals_ghz=intervals, widths_hz=widths, dd_only_widths_hz=w_dd, field_only_widths_hz=w_fld,
        dominance=dominance, nominal_ghz=nominal, cases=cases,
        settings={"eta_m1": eta1, "ratio": p.ratio, "xi_over_B": xi0, "J_max": p.J_max,
                  "trap": asdict(trap), "separations_nm": list(trap.separations),
                  "theta": p.geometry.theta, "model_products": [list(m) for m in model.model]},
    )
    rep.verdict = overlap_check(rep, nominal["delta_omega"] * 1e9)
    return rep


def _intervals_disjoint(intervals: list[list[float]]) -> tuple[bool, float]:
    margin = float("inf")
    for i in range(len(intervals)):
        for j in range(i + 1, len(intervals)):
            (a0, a1), (b0, b1) = sorted(intervals[i]), sorted(intervals[j])
            margin = min(margin, max(b0 - a1, a0 - b1))
    return margin > 0, margin


def overlap_check(report: BroadeningReport | dict, delta_omega_hz: float, width_ratio: float = 1e-4) -> dict:
    """Pairwise disjointness of the intervals and the omega_em3 width against delta omega.

    ``report`` may also be a plain mapping of name -> [low, high] in GHz.
    """
    intervals = report.intervals_ghz if isinstance(report, BroadeningReport) else report
    names = sorted(intervals)
    disjoint, margin = _intervals_disjoint([intervals[k] for k in names])
    out = {"disjoint": bool(disjoint), "margin_hz": margin * 1e9}
    if "omega_em3" in intervals and delta_omega_hz > 0:
        lo, hi = intervals["omega_em3"]
        ratio = (hi - lo) * 1e9 / delta_omega_hz
        out.update({"omega_em3_width_over_delta_omega": ratio, "width_ratio_limit": width_ratio,
                    "feasible": bool(disjoint and ratio <= width_ratio)})
    else:
        out["feasible"] = bool(disjoint)
    return out


@dataclass
class IndividualReport:
    flip_ghz: tuple[float, float]
    widths_hz: tuple[float, float]
    separation_hz: float
    ratio: float
    threshold: float
    feasible: bool
    settings: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = __version__
        return d


def individual_broadening(protocol: GateProtocol | None = None, trap: TrapGeometry | None = None,
                          eta1: float | None = None) -> IndividualReport:
    """Flip-frequency width of each molecule over its own position spread."""
    p = protocol or GateProtocol()
    trap = trap or TrapGeometry()
    eta1 = p.eta_start if eta1 is None else eta1
    r0 = trap.r_nm
    h = 0.5 * trap.delta_r_nm

    def flip(z: float) -> float:
        q = single_qubit_states(p.params, p.eta_el, eta_profile(eta1, p.ratio, r0, z), p.J_max)
        return cm1_to_ghz(q.splitting * p.params.B)

    nominal = (flip(0.0), flip(r0))
    widths = tuple(abs(flip(z + h) - flip(z - h)) * 1e9 for z in (0.0, r0))
    sep = abs(nominal[1] - nominal[0]) * 1e9
    ratio = max(widths) / sep if sep > 0 else float("inf")
    return IndividualReport(nominal, widths, sep, ratio, trap.threshold, bool(ratio < trap.threshold),
                            {"eta_m1": eta1, "ratio": p.ratio, "trap": asdict(trap)})


def with_trap(protocol: GateProtocol, trap: TrapGeometry) -> GateProtocol:
    """Protocol whose coupling strength matches the trap separation (r^-3 law from 500 nm)."""
    return replace(protocol, xi_over_B=protocol.xi_over_B * (500.0 / trap.r_nm) ** 3)
