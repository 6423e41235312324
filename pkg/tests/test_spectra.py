import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigmadimer.gates import GateProtocol, dimer_qubit_seed
from sigmadimer.spectra import (
    BisectionCoupling,
    DimerSweep,
    GridTooCoarseError,
    MatrixPencil,
    PerturbativeCoupling,
    SpectraError,
    detect_avoided_crossing,
    diagonalize,
    fix_signs,
    sweep_track,
    tracked_csv,
    transition_frequencies,
)


def char_poly_roots(A, tol=1e-14):
    """Eigenvalues of a symmetric 3x3 by bisection on det(A - x I) inside Gershgorin bounds."""
    f = lambda x: np.linalg.det(A - x * np.eye(3))
    r = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    lo, hi = float(np.min(np.diag(A) - r)) - 1, float(np.max(np.diag(A) + r)) + 1
    xs = np.linspace(lo, hi, 20001)
    fx = np.array([f(x) for x in xs])
    roots = []
    for i in np.flatnonzero(np.sign(fx[:-1]) != np.sign(fx[1:])):
        a, b = xs[i], xs[i + 1]
        while b - a > tol * max(1.0, abs(a)):
            m = 0.5 * (a + b)
            if np.sign(f(m)) == np.sign(f(a)):
                a = m
            else:
                b = m
        roots.append(0.5 * (a + b))
    return np.array(roots)


def test_eigensolver_against_characteristic_polynomial():
    rng = np.random.default_rng(7)
    for _ in range(5):
        M = rng.normal(size=(3, 3))
        A = M + M.T
        sol = diagonalize(A)
        ref = char_poly_roots(A)
        assert ref.size == 3
        assert np.allclose(sol.values, ref, atol=1e-10)
        assert np.max(sol.residuals(A)) < 1e-12


def test_diagonalize_rejects_bad_input():
    with pytest.raises(SpectraError):
        diagonalize(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(SpectraError):
        diagonalize(np.array([[1.0, 1j], [-1j, 1.0]]))


def test_fix_signs_is_deterministic():
    v = np.array([[0.6, -0.8], [-0.8, -0.6]])
    a = fix_signs(v)
    assert np.array_equal(a, fix_signs(-v))


def two_level(c):
    return MatrixPencil(np.array([[0.0, c], [c, 0.0]]), np.array([[1.0, 0.0], [0.0, -1.0]]))


@pytest.mark.parametrize("c", [1e-3, 2.5e-6, 0.05])
def test_two_level_gap_coarse_grid(c):
    """Grid much coarser than the gap: character swaps between points, gap by bisection."""
    pencil = two_level(c)
    grid = np.linspace(-1.0, 1.05, 12)
    if c > 0.01:
        grid = np.linspace(-1.0, 1.05, 400)
    tr = sweep_track(grid, pencil, 2, coupling_estimator=BisectionCoupling(pencil))
    found = detect_avoided_crossing(tr, gap_threshold=1.0)
    assert found, "avoided crossing not detected"
    assert min(x.gap for x in found) == pytest.approx(2 * abs(c), rel=0, abs=1e-9)
    # Adiabatic tracking keeps the energy ordering.
    assert np.all(tr.energies[:, 0] <= tr.energies[:, 1])


def test_true_crossing_is_passed_diabatically():
    pencil = two_level(0.0)
    grid = np.linspace(-1.0, 1.05, 12)
    tr = sweep_track(grid, pencil, 2)
    assert tr.crossings == []
    assert tr.energies[0, 0] < tr.energies[0, 1] and tr.energies[-1, 0] > tr.energies[-1, 1]


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-4, 0.2), st.floats(-0.4, 0.4))
def test_two_level_gap_property(c, shift):
    pencil = MatrixPencil(np.array([[-shift, c], [c, shift]]), np.diag([1.0, -1.0]))
    grid = np.linspace(-1.0, 1.0 + math.pi / 100, 64)
    tr = sweep_track(grid, pencil, 2, coupling_estimator=BisectionCoupling(pencil))
    gaps = [x.gap for x in detect_avoided_crossing(tr, gap_threshold=1.0)]
    assert gaps and min(gaps) == pytest.approx(2 * c, abs=1e-9)


def test_grid_validation_and_coarse_error():
    pencil = two_level(0.3)
    with pytest.raises(SpectraError):
        sweep_track([0.0, 1.0, 0.5], pencil, 2)
    with pytest.raises(SpectraError):
        sweep_track([], pencil, 2)
    # A Givens-like rotation by 90 degrees in one step leaves no continuation.
    rot = lambda x: np.array([[math.cos(x), math.sin(x)], [math.sin(x), -math.cos(x)]]) * (1 + x)
    with pytest.raises(GridTooCoarseError):
        sweep_track([0.0, math.pi / 2], rot, 1, overlap_floor=0.9)


def test_transition_frequencies():
    B = 1 / 29.9792458  # 1 GHz per unit
    f = transition_frequencies([0.0, 1.0, 3.0, 6.0], B)
    assert (f.em1, f.em2, f.em3) == pytest.approx((1.0, 2.0, 3.0))
    assert f.delta == pytest.approx(2.0)


def test_tracked_csv_format():
    pencil = two_level(0.1)
    tr = sweep_track(np.linspace(-1, 1, 5), pencil, 2)
    text = tracked_csv(tr, 0.462)
    lines = text.split("\n")
    assert lines[0].startswith("eta_m1,E0_cm-1,E1_cm-1")
    assert len(lines) == 7 and lines[-1] == "" and "\r" not in text


def nao_crossing(xi, estimator):
    p = GateProtocol(J_max=2.5, xi_over_B=xi)
    sweep = DimerSweep(p.config(0.0), 2.5, 1.1, 0.0)
    grid = np.linspace(2.62, 2.65, 31)
    est = PerturbativeCoupling(sweep) if estimator == "pt" else BisectionCoupling(sweep)
    return sweep_track(grid, sweep, 4, dimer_qubit_seed(p, 2.62), coupling_estimator=est)


def test_perturbative_coupling_matches_bisection_at_enhanced_coupling():
    a = nao_crossing(100 * 5.39e-6, "pt").crossings
    b = nao_crossing(100 * 5.39e-6, "bisection").crossings
    assert len(a) == len(b) == 1
    assert a[0].interval == b[0].interval
    assert a[0].gap == pytest.approx(b[0].gap, rel=1e-4)


def test_narrow_crossing_resolved_only_by_perturbative_route():
    pt = nao_crossing(5.39e-6, "pt").crossings
    assert len(pt) == 1 and 2.633 <= pt[0].center <= 2.634
    # Gap scales with the square of the coupling: second-order, symmetry-allowed.
    strong = nao_crossing(100 * 5.39e-6, "pt").crossings[0].gap
    assert strong / pt[0].gap == pytest.approx(1e4, rel=1e-3)
    assert nao_crossing(5.39e-6, "bisection").crossings == []


def test_results_independent_of_worker_count():
    p = GateProtocol(J_max=1.5, xi_over_B=1e-3)
    sweep = DimerSweep(p.config(0.0), 1.5, 1.15, 0.0)
    grid = np.linspace(0.5, 3.0, 11)
    a = sweep_track(grid, sweep, 6, workers=1)
    b = sweep_track(grid, sweep, 6, workers=2)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.columns, b.columns)


def test_zero_field_start_needs_a_grid_below_the_coupling_scale():
    p = GateProtocol(J_max=1.5, xi_over_B=1e-3)
    sweep = DimerSweep(p.config(0.0), 1.5, 1.15, 0.0)
    with pytest.raises(GridTooCoarseError):
        sweep_track([0.0, 0.25], sweep, 4, overlap_floor=0.9)
    grid = np.concatenate([[0.0], 0.25 * np.logspace(-14, 0, 113)])
    tr = sweep_track(grid, sweep, 4, overlap_floor=0.9)
    assert tr.min_overlaps.min() > 0.9
    # The four N = 0 pair states stay among themselves; exact crossings reorder them.
    assert sorted(tr.columns[-1].tolist()) == [0, 1, 2, 3]
