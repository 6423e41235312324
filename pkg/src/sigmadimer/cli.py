"""Command-line entry point.

Configuration is an INI file; every key is optional and falls back to the
defaults below (NaO constants). ``--set section.key=value`` overrides single
keys. Unknown sections or keys are rejected.

    [molecule]   B, gamma (cm^-1), mu (debye), g_S
    [fields]     eta_start, eta_stop, eta_step (site-1 eta_m grid), ratio,
                 eta_el (comma list allowed for ``sweep``), eta_target
    [coupling]   xi_over_B, theta, phi
    [truncation] J_max
    [tracking]   tracks, window
    [gate]       scheme (I or II), control (1 or 2), min_resolvable_hz,
                 grid_step, eta_operating, input (four amplitudes)
    [trap]       r_nm, delta_r_nm, convention (separation or half), threshold
    [run]        output_dir, workers, seed

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .gates import GateError, GateProtocol, _jsonable, run_scheme1, run_scheme2
from .hamiltonian import DimerConfig, Geometry
from .qubits import QubitError, concurrence_profile
from .spectra import DimerSweep, SpectraError, sweep_track, tracked_csv
from .units import CONSTANTS, FieldPoint, MoleculeParams, UnitsError, field_from_eta_el, field_from_eta_m

SCHEMA: dict[str, dict[str, object]] = {
    "molecule": {"B": 0.462, "gamma": 0.193, "mu": 7.88, "g_S": 2.0023},
    "fields": {"eta_start": 0.0, "eta_stop": 3.0, "eta_step": 0.1, "ratio": 1.1, "eta_el": "0",
               "eta_target": 2.64},
    "coupling": {"xi_over_B": 5.39e-6, "theta": math.pi / 2, "phi": 0.0},
    "truncation": {"J_max": 3.5},
    "tracking": {"tracks": 8, "window": 4},
    "gate": {"scheme": "II", "control": 2, "min_resolvable_hz": 1e3, "grid_step": 0.001,
             "input": "0.5,0.5,0.5,0.5", "eta_operating": 2.63},
    "trap": {"r_nm": 500.0, "delta_r_nm": 30.0, "convention": "separation", "threshold": 1e-2},
    "run": {"output_dir": "out", "workers": 1, "seed": 0},
}


class ConfigError(ValueError):
    pass


def _coerce(default, text: str):
    if isinstance(default, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def load_config(path: str | None, overrides: list[str]) -> dict[str, dict[str, object]]:
    """Defaults, then the INI file, then ``section.key=value`` overrides."""
    cfg = {s: dict(v) for s, v in SCHEMA.items()}
    pairs: list[tuple[str, str, str]] = []
    if path:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for sec in parser.sections():
            for key, val in parser.items(sec):
                pairs.append((sec, key, val))
    for item in overrides:
        name, sep, val = item.partition("=")
        sec, dot, key = name.partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        pairs.append((sec.strip(), key.strip(), val))
    for sec, key, val in pairs:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        if key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {key!r} in [{sec}]")
        try:
            cfg[sec][key] = _coerce(SCHEMA[sec][key], val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {sec}.{key}: {val!r}") from exc
    _validate(cfg)
    return cfg


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _validate(cfg: dict) -> None:
    f = cfg["fields"]
    if f["eta_step"] <= 0:
        raise ConfigError("fields.eta_step must be positive")
    if f["eta_stop"] < f["eta_start"]:
        raise ConfigError("empty grid: fields.eta_stop < fields.eta_start")
    if f["eta_start"] < 0 or f["ratio"] <= 0:
        raise ConfigError("field parameters must be non-negative and ratio positive")
    if not _floats(f["eta_el"]) or min(_floats(f["eta_el"])) < 0:
        raise ConfigError("fields.eta_el must list non-negative values")
    j2 = 2 * cfg["truncation"]["J_max"]
    if j2 != int(j2) or int(j2) % 2 != 1:
        raise ConfigError("truncation.J_max must be a half-integer")
    if cfg["tracking"]["tracks"] < 1:
        raise ConfigError("tracking.tracks must be at least 1")
    if cfg["run"]["workers"] < 1:
        raise ConfigError("run.workers must be at least 1")
    if cfg["gate"]["scheme"] not in ("I", "II"):
        raise ConfigError("gate.scheme must be I or II")
    if cfg["gate"]["control"] not in (1, 2):
        raise ConfigError("gate.control must be 1 or 2")
    if len(_floats(cfg["gate"]["input"])) != 4:
        raise ConfigError("gate.input needs four amplitudes")
    if cfg["trap"]["convention"] not in ("separation", "half"):
        raise ConfigError("trap.convention must be separation or half")
    try:
        MoleculeParams(**cfg["molecule"])
    except UnitsError as exc:
        raise ConfigError(str(exc)) from exc


def grid_from(cfg: dict) -> np.ndarray:
    f = cfg["fields"]
    n = int(math.floor((f["eta_stop"] - f["eta_start"]) / f["eta_step"] + 1e-9)) + 1
    return f["eta_start"] + f["eta_step"] * np.arange(n)


def tracking_grid(grid: np.ndarray, xi_over_B: float, per_decade: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Grid used for tracking plus the indices of the requested points in it.

    Starting at zero field, the eigenstates change character on the scale of
    the zero-field splittings (second order in xi), so geometric points from
    1e-3 xi^2 up to the first step are inserted.
    """
    if grid.size < 2 or grid[0] != 0.0:
        return grid, np.arange(grid.size)
    lo = max(1e-3 * xi_over_B**2, 1e-16 * grid[1])
    n = int(math.ceil(math.log10(grid[1] / lo) * per_decade))
    extra = np.geomspace(lo, grid[1], n + 1)[:-1]
    full = np.concatenate([[0.0], extra, grid[1:]])
    return full, np.concatenate([[0], np.arange(extra.size + 1, full.size)])


def protocol_from(cfg: dict) -> GateProtocol:
    c, f, g = cfg["coupling"], cfg["fields"], cfg["gate"]
    return GateProtocol(
        scheme=g["scheme"], control=g["control"], params=MoleculeParams(**cfg["molecule"]),
        ratio=f["ratio"], eta_el=_floats(f["eta_el"])[0], eta_start=g["eta_operating"],
        eta_target=f["eta_target"], xi_over_B=c["xi_over_B"], geometry=Geometry(phi=c["phi"], theta=c["theta"]),
        J_max=cfg["truncation"]["J_max"], grid_step=g["grid_step"], workers=cfg["run"]["workers"],
        min_resolvable_hz=g["min_resolvable_hz"],
    )


def provenance(cfg: dict, command: str) -> dict:
    return {"command": command, "version": __version__, "config": cfg}


def _csv_with_provenance(body: str, prov: dict) -> str:
    line = json.dumps(_jsonable(prov), sort_keys=True)
    return f"# {line}\n{body}"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def cmd_sweep(cfg: dict) -> list[Path]:
    params = MoleculeParams(**cfg["molecule"])
    c = cfg["coupling"]
    grid = grid_from(cfg)
    out = Path(cfg["run"]["output_dir"])
    written = []
    for eta_el in _floats(cfg["fields"]["eta_el"]):
        base = DimerConfig(params, params, FieldPoint(), c["xi_over_B"], Geometry(phi=c["phi"], theta=c["theta"]))
        sweep = DimerSweep(base, cfg["truncation"]["J_max"], cfg["fields"]["ratio"], eta_el)
        full, rows = tracking_grid(grid, c["xi_over_B"])
        tracked = sweep_track(full, sweep, cfg["tracking"]["tracks"], workers=cfg["run"]["workers"],
                              window=cfg["tracking"]["window"])
        tracked.grid, tracked.energies, tracked.columns = full[rows], tracked.energies[rows], tracked.columns[rows]
        body = tracked_csv(tracked, params.B, extra={
            "H1_T": [field_from_eta_m(params, x) for x in grid],
            "E_kV_per_cm": [field_from_eta_el(params, eta_el)] * grid.size,
        })
        prov = provenance(cfg, "sweep")
        prov["eta_el"] = eta_el
        prov["crossings"] = [{"interval": list(x.interval), "gap_B": x.gap, "tracks": list(x.tracks)}
                             for x in tracked.crossings]
        written.append(_write(out, f"sweep_eta_el_{eta_el:g}.csv", _csv_with_provenance(body, prov)))
    return written


def cmd_concurrence(cfg: dict) -> list[Path]:
    params = MoleculeParams(**cfg["molecule"])
    c = cfg["coupling"]
    grid = grid_from(cfg)
    eta_el = _floats(cfg["fields"]["eta_el"])[0]
    prof = concurrence_profile(grid, cfg["fields"]["ratio"], c["xi_over_B"], params, cfg["truncation"]["J_max"],
                               Geometry(phi=c["phi"], theta=c["theta"]), eta_el)
    out = Path(cfg["run"]["output_dir"])
    prov = provenance(cfg, "concurrence")
    report = {"provenance": prov, "bell_report": prof.bell_report()}
    return [_write(out, "concurrence.csv", _csv_with_provenance(prof.to_csv(params.B), prov)),
            _write(out, "bell_report.json", _json(report))]


def cmd_cnot(cfg: dict) -> list[Path]:
    p = protocol_from(cfg)
    amp = _floats(cfg["gate"]["input"])
    rep = run_scheme1(amp, p) if p.scheme == "I" else run_scheme2(amp, p)
    d = rep.to_dict()
    d["provenance"] = provenance(cfg, "cnot")
    return [_write(Path(cfg["run"]["output_dir"]), f"cnot_scheme{p.scheme}_control{p.control}.json", _json(d))]


def cmd_broadening(cfg: dict) -> list[Path]:
    from .feasibility import TrapGeometry, composite_broadening, individual_broadening

    p = protocol_from(cfg)
    t = cfg["trap"]
    try:
        trap = TrapGeometry(r_nm=t["r_nm"], delta_r_nm=t["delta_r_nm"], convention=t["convention"],
                            threshold=t["threshold"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    comp = composite_broadening(p, trap, eta1=cfg["fields"]["eta_target"])
    ind = individual_broadening(p, trap, eta1=cfg["gate"]["eta_operating"])
    prov = provenance(cfg, "broadening")
    d = {"composite": comp.to_dict(), "individual": ind.to_dict(), "provenance": prov}
    out = Path(cfg["run"]["output_dir"])
    return [_write(out, "broadening.json", _json(d)),
            _write(out, "broadening.csv", _csv_with_provenance(comp.to_csv(), prov))]


def cmd_constants(cfg: dict) -> str:
    params = MoleculeParams(**cfg["molecule"])
    d = {
        "constants": CONSTANTS,
        "molecule": cfg["molecule"],
        "tesla_per_unit_eta_m": field_from_eta_m(params, 1.0),
        "kV_per_cm_per_unit_eta_el": field_from_eta_el(params, 1.0),
        "version": __version__,
    }
    return _json(d)


COMMANDS = {"sweep": cmd_sweep, "concurrence": cmd_concurrence, "cnot": cmd_cnot, "broadening": cmd_broadening}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigmadimer", description="Spectra, entanglement and CNOT gates of 2-Sigma molecule pairs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "constants"):
        sp = sub.add_parser(name)
        sp.add_argument("-c", "--config", help="INI configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override one key")
        sp.add_argument("-o", "--output-dir", help="output directory (run.output_dir)")
        sp.add_argument("-j", "--workers", type=int, help="worker processes (run.workers)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.output_dir:
        overrides.append(f"run.output_dir={args.output_dir}")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "constants":
            sys.stdout.write(cmd_constants(cfg))
            return 0
        for path in COMMANDS[args.command](cfg):
            print(path)
    except (ConfigError, UnitsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (GateError, QubitError, SpectraError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
