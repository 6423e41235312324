"""Dense eigensolver, adiabatic state tracking and avoided-crossing analysis.

A sweep is a parallel map of independent diagonalizations followed by a
sequential fold that threads state identity by maximal overlap. Narrow
avoided crossings (gaps far below the grid resolution) show up in the fold
as a swap of energy order between a tracked state and a neighbour. Each such
swap is classified by a coupling estimate: a gap above ``min_gap`` means the
crossing is avoided and the adiabatic track keeps its energy order; below
``min_gap`` the crossing is taken as a true one and the track stays
diabatic.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from threadpoolctl import threadpool_limits

from .hamiltonian import DimerConfig, build_dimer_hamiltonian, build_single_hamiltonian, build_vdd
from .units import FieldPoint, cm1_to_ghz

MIN_GAP = 1e-12  # units of B; below this a crossing counts as exact


class SpectraError(RuntimeError):
    pass


class GridTooCoarseError(SpectraError):
    def __init__(self, interval: tuple[float, float], overlap: float):
        self.interval = interval
        self.overlap = overlap
        super().__init__(f"grid too coarse in {interval}: best overlap {overlap:.3f}")


@dataclass(frozen=True)
class EigenSolution:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def residuals(self, H: np.ndarray) -> np.ndarray:
        return np.linalg.norm(H @ self.vectors - self.vectors * self.values, axis=0)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude component is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def diagonalize(H: np.ndarray) -> EigenSolution:
    """Full spectrum of a real symmetric matrix, ascending, with fixed signs."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise SpectraError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise SpectraError("matrix has non-finite entries")
    if np.iscomplexobj(H):
        raise SpectraError("expected a real matrix")
    w, v = np.linalg.eigh(H)
    return EigenSolution(w, fix_signs(v))


# ---------------------------------------------------------------------------
# Sweep builders (picklable so they can cross process boundaries)


@dataclass(frozen=True)
class DimerSweep:
    """Maps ``eta_m`` of site 1 to the dimer Hamiltonian; site 2 sits at ``ratio * eta_m``."""

    config: DimerConfig
    J_max: float = 3.5
    ratio: float = 1.0
    eta_el: float = 0.0

    def fields(self, x: float) -> FieldPoint:
        return FieldPoint.inhomogeneous(x, self.ratio, self.eta_el)

    def config_at(self, x: float) -> DimerConfig:
        return self.config.with_fields(self.fields(x))

    def __call__(self, x: float) -> np.ndarray:
        return build_dimer_hamiltonian(self.config_at(x), self.J_max)


@dataclass(frozen=True)
class SingleSweep:
    """Maps ``eta_m`` to one molecule's Hamiltonian at fixed ``eta_el``."""

    params: object
    J_max: float = 3.5
    eta_el: float = 0.0

    def __call__(self, x: float) -> np.ndarray:
        return build_single_hamiltonian(self.params, self.eta_el, x, self.J_max)


@dataclass(frozen=True)
class MatrixPencil:
    """``H(x) = A + x * B``; handy for model problems."""

    A: np.ndarray
    B: np.ndarray

    def __call__(self, x: float) -> np.ndarray:
        return self.A + x * self.B


# ---------------------------------------------------------------------------
# Coupling estimates for narrow crossings


@dataclass(frozen=True)
class CrossingEvent:
    """What the fold hands a coupling estimator."""

    x_a: float
    x_b: float
    sol_a: EigenSolution
    sol_b: EigenSolution
    t_a: int  # column of the tracked state at x_a
    x_col_a: int  # column of the partner at x_a
    t_b: int  # diabatic continuation columns at x_b
    x_col_b: int


CouplingEstimator = Callable[[CrossingEvent], float]


def diabatic_center(ev: CrossingEvent) -> float:
    da = ev.sol_a.values[ev.t_a] - ev.sol_a.values[ev.x_col_a]
    db = ev.sol_b.values[ev.t_b] - ev.sol_b.values[ev.x_col_b]
    if da == db:
        return 0.5 * (ev.x_a + ev.x_b)
    return ev.x_a + (ev.x_b - ev.x_a) * da / (da - db)


def bisection_gap(builder: Callable[[float], np.ndarray], ev: CrossingEvent, max_iter: int = 60) -> tuple[float, float, float]:
    """Locate a crossing by bisecting on state character; return (lo, hi, min gap).

    The character test uses overlaps with the two states at ``x_a``; the gap is
    the smallest splitting of the two most-overlapping eigenstates seen.
    """
    ref = ev.sol_a.vectors[:, [ev.t_a, ev.x_col_a]]
    t_below = ev.sol_a.values[ev.t_a] < ev.sol_a.values[ev.x_col_a]
    lo, hi = ev.x_a, ev.x_b
    best = math.inf
    best_x, rank = 0.5 * (lo + hi), None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        sol = diagonalize(builder(mid))
        ov = (ref.T @ sol.vectors) ** 2
        pair = np.sort(np.argsort(ov.sum(axis=0))[-2:])
        c1, c2 = pair
        if c2 == c1 + 1 and sol.values[c2] - sol.values[c1] < best:
            best, best_x, rank = sol.values[c2] - sol.values[c1], mid, int(c1)
        t_low_now = ov[0, c1] > ov[0, c2]
        if t_low_now == t_below:
            lo = mid
        else:
            hi = mid
    if rank is not None and best > 0:
        # The character switch sits near, not at, the gap minimum; polish on the
        # hyperbola scale best / |slope difference|.
        da = ev.sol_a.values[ev.t_a] - ev.sol_a.values[ev.x_col_a]
        db = ev.sol_b.values[ev.t_b] - ev.sol_b.values[ev.x_col_b]
        slope = abs(da - db) / abs(ev.x_b - ev.x_a)
        a0, b0 = sorted((ev.x_a, ev.x_b))
        w = 4 * best / slope if slope > 0 else b0 - a0
        bounds = (max(a0, best_x - w), min(b0, best_x + w))
        if bounds[1] > bounds[0]:
            res = minimize_scalar(lambda x: _gap_at(builder, x, rank), bounds=bounds, method="bounded",
                                  options={"xatol": 1e-10 * (bounds[1] - bounds[0])})
            best = min(best, float(res.fun))
    return lo, hi, float(best)


@dataclass(frozen=True)
class BisectionCoupling:
    """Generic estimator: gap found by bisecting to the crossing."""

    builder: Callable[[float], np.ndarray]
    max_iter: int = 60
    min_gap: float = MIN_GAP

    def __call__(self, ev: CrossingEvent) -> float:
        return bisection_gap(self.builder, ev, self.max_iter)[2]


@dataclass(frozen=True)
class PerturbativeCoupling:
    """Dimer estimator: effective coupling of two product states through V_dd.

    With the single-molecule eigenbasis at the crossing point, the coupling of
    product states T and X is ``W = xi V_TX + xi^2 sum_k V_Tk V_kX / (E_c - E_k)``
    and the minimal gap is ``2|W|``. Falls back to bisection when either state
    is not close to a single product state.
    """

    sweep: DimerSweep
    purity_floor: float = 0.9
    # Roundoff of a symmetry-forbidden coupling in this route is ~1e-20 B.
    min_gap: float = 1e-18

    def __call__(self, ev: CrossingEvent) -> float:
        return self.coupling(ev)[0]

    def coupling(self, ev: CrossingEvent) -> tuple[float, dict]:
        xc = diabatic_center(ev)
        cfg = self.sweep.config_at(xc)
        f = cfg.fields
        w1, u1 = np.linalg.eigh(build_single_hamiltonian(cfg.params1, f.eta_el[0], f.eta_m[0], self.sweep.J_max))
        w2, u2 = np.linalg.eigh(build_single_hamiltonian(cfg.params2, f.eta_el[1], f.eta_m[1], self.sweep.J_max))
        U = np.kron(u1, u2)
        E0 = (w1[:, None] + w2[None, :]).ravel()
        vT = U.T @ ev.sol_a.vectors[:, ev.t_a]
        vX = U.T @ ev.sol_a.vectors[:, ev.x_col_a]
        iT, iX = int(np.argmax(vT**2)), int(np.argmax(vX**2))
        pT, pX = float(vT[iT] ** 2), float(vX[iX] ** 2)
        if iT == iX or min(pT, pX) < self.purity_floor:
            gap = bisection_gap(self.sweep, ev)[2]
            return gap, {"method": "bisection", "x_center": xc}
        V = build_vdd(cfg.geometry, self.sweep.J_max)
        rows = (U[:, [iT, iX]].T @ V) @ U
        xi = cfg.xi_over_B
        Ec = 0.5 * (E0[iT] + E0[iX])
        mask = np.ones(E0.size, bool)
        mask[[iT, iX]] = False
        second = np.sum(rows[0, mask] * rows[1, mask] / (Ec - E0[mask]))
        W = xi * rows[0, iX] + xi * xi * second
        info = {
            "method": "perturbative",
            "x_center": xc,
            "first_order": float(xi * rows[0, iX]),
            "second_order": float(xi * xi * second),
            "purity": (pT, pX),
            "product_states": (iT, iX),
        }
        return float(2 * abs(W)), info


# ---------------------------------------------------------------------------
# Tracking


@dataclass(frozen=True)
class AvoidedCrossing:
    interval: tuple[float, float]
    gap: float  # units of B
    tracks: tuple[int, ...]  # participating track ids (-1 for an untracked partner)
    center: float | None = None

    def __post_init__(self) -> None:
        if not self.gap > 0:
            raise SpectraError("avoided crossing with non-positive gap")


@dataclass
class TrackedSpectrum:
    grid: np.ndarray
    energies: np.ndarray  # (G, K), units of B
    columns: np.ndarray  # (G, K) eigenvector column of each track
    vectors: np.ndarray | None  # (G, n, K) if kept
    initial_vectors: np.ndarray
    final_vectors: np.ndarray
    crossings: list[AvoidedCrossing] = field(default_factory=list)
    builder: Callable[[float], np.ndarray] | None = field(default=None, repr=False)
    min_overlaps: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.energies.shape[1]

    def at(self, i: int) -> np.ndarray:
        return self.energies[i]


def _solve_point(builder: Callable[[float], np.ndarray], x: float) -> EigenSolution:
    with threadpool_limits(limits=1):
        return diagonalize(builder(x))


def _solve_point_star(args):
    return _solve_point(*args)


def solve_grid(builder, grid: Sequence[float], workers: int = 1) -> Iterator[EigenSolution]:
    """Ordered stream of solutions; bounded look-ahead keeps memory flat."""
    grid = list(grid)
    if workers <= 1:
        for x in grid:
            yield _solve_point(builder, x)
        return
    batch = 2 * workers
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for start in range(0, len(grid), batch):
            chunk = [(builder, x) for x in grid[start:start + batch]]
            yield from ex.map(_solve_point_star, chunk)


def _greedy_match(overlap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Assign each row to a distinct column, largest overlap first."""
    K = overlap.shape[0]
    ov = overlap.copy()
    cols = np.full(K, -1)
    best = np.zeros(K)
    for _ in range(K):
        r, c = np.unravel_index(np.argmax(ov), ov.shape)
        cols[r] = c
        best[r] = overlap[r, c]
        ov[r, :] = -1
        ov[:, c] = -1
    return cols, best


def _clusters(values: np.ndarray, cols: Iterable[int], tol: float) -> list[np.ndarray]:
    """Degenerate clusters (within ``tol``) that contain any of ``cols``."""
    out = []
    seen = set()
    for c in cols:
        if c in seen:
            continue
        lo = c
        while lo > 0 and values[lo] - values[lo - 1] <= tol:
            lo -= 1
        hi = c
        while hi + 1 < values.size and values[hi + 1] - values[hi] <= tol:
            hi += 1
        if hi > lo:
            members = np.arange(lo, hi + 1)
            seen.update(members.tolist())
            out.append(members)
    return out


def align_degenerate(prev: np.ndarray, sol: EigenSolution, cols: np.ndarray, tol: float) -> np.ndarray:
    """Track vectors at the new point, rotated inside degenerate clusters.

    For tracks landing in a cluster, the cluster basis is rotated (orthogonal
    Procrustes) to best match the previous vectors, so tracking through an
    exact degeneracy is well defined.
    """
    new = sol.vectors[:, cols].copy()
    for members in _clusters(sol.values, cols.tolist(), tol):
        tracks = np.flatnonzero(np.isin(cols, members))
        Vc = sol.vectors[:, members]
        M = Vc.T @ prev[:, tracks]
        a, _, bt = np.linalg.svd(M, full_matrices=False)
        new[:, tracks] = Vc @ (a @ bt)
    return new


def open_degenerate(vecs: np.ndarray, cols: np.ndarray, prev: EigenSolution, new: EigenSolution, tol: float) -> np.ndarray:
    """Re-seed tracks that sit in a degenerate cluster of the previous point.

    A degenerate eigenbasis is arbitrary, so the continuation of a cluster is
    taken as the new eigenvectors with the largest weight on its subspace,
    assigned to the tracked members in energy order.
    """
    vecs = vecs.copy()
    for members in _clusters(prev.values, cols.tolist(), tol):
        w = np.sum((prev.vectors[:, members].T @ new.vectors) ** 2, axis=0)
        cont = np.sort(np.argsort(w)[-members.size:])
        for k in np.flatnonzero(np.isin(cols, members)):
            vecs[:, k] = new.vectors[:, cont[int(np.searchsorted(members, cols[k]))]]
    return vecs


def _partner_map(sol_a: EigenSolution, sol_b: EigenSolution, ca: int, cb: int, window: int) -> dict[int, int]:
    """Map neighbours of column ``ca`` at a to their best columns near ``cb`` at b."""
    n = sol_a.dim
    ja = np.arange(max(0, ca - window), min(n, ca + window + 1))
    jb = np.arange(max(0, cb - 2 * window - 1), min(n, cb + 2 * window + 2))
    ov = np.abs(sol_a.vectors[:, ja].T @ sol_b.vectors[:, jb])
    return {int(j): int(jb[np.argmax(ov[i])]) for i, j in enumerate(ja) if j != ca}


def sweep_track(
    grid: Sequence[float],
    builder: Callable[[float], np.ndarray],
    K: int,
    seed: Sequence[int] | Callable[[EigenSolution], Sequence[int]] | None = None,
    *,
    overlap_floor: float = 0.5,
    workers: int = 1,
    coupling_estimator: CouplingEstimator | None = None,
    min_gap: float | None = None,
    degeneracy_tol: float = MIN_GAP,
    window: int = 4,
    keep_vectors: bool = False,
) -> TrackedSpectrum:
    """Follow ``K`` states adiabatically along ``grid``.

    ``min_gap`` defaults to the estimator's own ``min_gap`` (its resolution
    for telling an exactly vanishing coupling from a small one).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise SpectraError("grid must be a non-empty 1-D sequence")
    if grid.size > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise SpectraError("grid must be strictly monotone")
    estimator = coupling_estimator or BisectionCoupling(builder)
    if min_gap is None:
        min_gap = getattr(estimator, "min_gap", MIN_GAP)

    stream = solve_grid(builder, grid, workers)
    sol = next(stream)
    if K < 1 or K > sol.dim:
        raise SpectraError(f"K={K} outside 1..{sol.dim}")
    if seed is None:
        cols = np.arange(K)
    else:
        cols = np.asarray(seed(sol) if callable(seed) else seed, dtype=int)
        if cols.size != K or len(set(cols.tolist())) != K:
            raise SpectraError("seed must name K distinct columns")
    vecs = sol.vectors[:, cols].copy()

    energies = [sol.values[cols]]
    columns = [cols.copy()]
    kept = [vecs.copy()] if keep_vectors else None
    initial = vecs.copy()
    crossings: list[AvoidedCrossing] = []
    min_ov = [1.0]
    prev_sol = sol

    for step, new_sol in enumerate(stream, start=1):
        xa, xb = grid[step - 1], grid[step]
        vecs = open_degenerate(vecs, cols, prev_sol, new_sol, degeneracy_tol)
        ov = np.abs(vecs.T @ new_sol.vectors)
        new_cols, best = _greedy_match(ov)
        prev_clusters = _clusters(prev_sol.values, range(prev_sol.dim), degeneracy_tol)
        cluster_of = {int(m): i for i, c in enumerate(prev_clusters) for m in c}
        if best.min() < overlap_floor:
            raise GridTooCoarseError((float(xa), float(xb)), float(best.min()))
        min_ov.append(float(best.min()))

        # Energy-order swaps with neighbours: classify and re-route tracks.
        adjusted = new_cols.copy()
        seen_pairs = set()
        for k in range(K):
            ca, cb = int(cols[k]), int(new_cols[k])
            partners = _partner_map(prev_sol, new_sol, ca, cb, window)
            avoided_a, avoided_b = [], []
            for j, mj in partners.items():
                if not ((j < ca and mj > cb) or (j > ca and mj < cb)):
                    continue
                if ca in cluster_of and cluster_of.get(j) == cluster_of[ca]:
                    continue  # order inside a degenerate cluster is arbitrary
                ev = CrossingEvent(float(xa), float(xb), prev_sol, new_sol, ca, j, cb, mj)
                gap = estimator(ev)
                if gap > min_gap:
                    avoided_a.append(j)
                    avoided_b.append(mj)
                    key = tuple(sorted((ca, j)))
                    if key not in seen_pairs:
                        seen_pairs.add(key)
                        other = np.flatnonzero(cols == j)
                        crossings.append(
                            AvoidedCrossing(
                                (float(min(xa, xb)), float(max(xa, xb))),
                                float(gap),
                                (k, int(other[0]) if other.size else -1),
                                float(diabatic_center(ev)),
                            )
                        )
            if avoided_a:
                rank = sorted([ca] + avoided_a).index(ca)
                adjusted[k] = sorted([cb] + avoided_b)[rank]
        if len(set(adjusted.tolist())) != K:
            raise SpectraError(f"track assignment collision in ({xa}, {xb})")
        cols = adjusted
        vecs = align_degenerate(vecs, new_sol, cols, degeneracy_tol)
        energies.append(new_sol.values[cols])
        columns.append(cols.copy())
        if keep_vectors:
            kept.append(vecs.copy())
        prev_sol = new_sol

    return TrackedSpectrum(
        grid=grid,
        energies=np.array(energies),
        columns=np.array(columns),
        vectors=np.array(kept) if keep_vectors else None,
        initial_vectors=initial,
        final_vectors=vecs,
        crossings=crossings,
        builder=builder,
        min_overlaps=np.array(min_ov),
    )


# ---------------------------------------------------------------------------
# Avoided-crossing detection on a finished sweep


def _gap_at(builder, x: float, rank: int) -> float:
    w = np.linalg.eigvalsh(builder(x))
    return float(w[rank + 1] - w[rank])


def detect_avoided_crossing(
    tracked: TrackedSpectrum,
    gap_threshold: float = 1e-2,
    refine_tol: float = 1e-9,
    min_gap: float = MIN_GAP,
    builder: Callable[[float], np.ndarray] | None = None,
) -> list[AvoidedCrossing]:
    """Crossings recorded during tracking plus resolved gap minima between tracks.

    A local minimum of the splitting between two tracks that are adjacent in
    the spectrum is refined with a bounded scalar minimization of the exact
    gap; minima below ``min_gap`` are classified as true crossings and dropped.
    """
    builder = builder or tracked.builder
    out = list(tracked.crossings)
    G, K = tracked.energies.shape
    if G < 3 or K < 2:
        return out
    for k1 in range(K):
        for k2 in range(K):
            if k1 == k2:
                continue
            c1, c2 = tracked.columns[:, k1], tracked.columns[:, k2]
            adjacent = c2 == c1 + 1
            gaps = tracked.energies[:, k2] - tracked.energies[:, k1]
            for i in range(1, G - 1):
                if not (adjacent[i - 1] and adjacent[i] and adjacent[i + 1]):
                    continue
                if not (gaps[i] <= gaps[i - 1] and gaps[i] <= gaps[i + 1] and gaps[i] < gap_threshold):
                    continue
                lo, hi = sorted((tracked.grid[i - 1], tracked.grid[i + 1]))
                rank = int(c1[i])
                if builder is not None:
                    res = minimize_scalar(
                        lambda x: _gap_at(builder, x, rank),
                        bounds=(lo, hi),
                        method="bounded",
                        options={"xatol": refine_tol},
                    )
                    center, gap = float(res.x), float(res.fun)
                    lo, hi = center - refine_tol, center + refine_tol
                else:
                    center, gap = float(tracked.grid[i]), float(gaps[i])
                if gap > min_gap:
                    out.append(AvoidedCrossing((float(lo), float(hi)), gap, (k1, k2), center))
    return out


def refine_crossing(builder, crossing: AvoidedCrossing, tracked: TrackedSpectrum, refine_tol: float) -> AvoidedCrossing:
    """Shrink a recorded crossing interval by bisection on state character."""
    lo, hi = crossing.interval
    i = int(np.searchsorted(tracked.grid, lo))
    sol_a = diagonalize(builder(lo))
    sol_b = diagonalize(builder(hi))
    k = crossing.tracks[0]
    ca = int(tracked.columns[i, k])
    partners = _partner_map(sol_a, sol_b, ca, int(tracked.columns[i + 1, k]), 4)
    ov = np.abs(sol_a.vectors[:, ca] @ sol_b.vectors)
    cb = int(np.argmax(ov))
    for j, mj in partners.items():
        if (j < ca and mj > cb) or (j > ca and mj < cb):
            ev = CrossingEvent(lo, hi, sol_a, sol_b, ca, j, cb, mj)
            a, b, gap = bisection_gap(builder, ev, max_iter=int(math.log2(max((hi - lo) / refine_tol, 2))) + 1)
            return AvoidedCrossing((a, b), crossing.gap, crossing.tracks, 0.5 * (a + b))
    return crossing


# ---------------------------------------------------------------------------
# Transition frequencies and output


@dataclass(frozen=True)
class Frequencies:
    """Gaps of four ascending levels in GHz: em1 bottom, em2 middle, em3 top."""

    em1: float
    em2: float
    em3: float

    @property
    def delta(self) -> float:
        return abs(self.em3 - self.em1)

    def as_dict(self) -> dict:
        return {"omega_em1": self.em1, "omega_em2": self.em2, "omega_em3": self.em3, "delta_omega": self.delta}


def transition_frequencies(energies: Sequence[float], B: float) -> Frequencies:
    """Gaps of four levels (units of B, any order) converted to GHz."""
    e = np.sort(np.asarray(energies, dtype=float))
    if e.size != 4:
        raise SpectraError(f"need exactly four levels, got {e.size}")
    g = np.diff(e) * B
    return Frequencies(cm1_to_ghz(g[0]), cm1_to_ghz(g[1]), cm1_to_ghz(g[2]))


def tracked_csv(tracked: TrackedSpectrum, B: float, x_name: str = "eta_m1", extra: dict[str, Sequence[float]] | None = None) -> str:
    """One row per grid point: sweep value, energies (cm^-1, GHz), track columns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    K = tracked.K
    header = [x_name]
    header += [f"E{k}_cm-1" for k in range(K)] + [f"E{k}_GHz" for k in range(K)] + [f"col{k}" for k in range(K)]
    extra = extra or {}
    header += list(extra)
    w.writerow(header)
    for i, x in enumerate(tracked.grid):
        e = tracked.energies[i] * B
        row = [f"{x:.12g}"] + [f"{v:.12g}" for v in e] + [f"{cm1_to_ghz(v):.12g}" for v in e]
        row += [str(int(c)) for c in tracked.columns[i]]
        row += [f"{extra[name][i]:.12g}" for name in extra]
        w.writerow(row)
    return buf.getvalue()
