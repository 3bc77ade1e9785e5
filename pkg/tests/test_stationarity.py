import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipodal.errors import NoConvergenceError
from bipodal.graphon import BipodalGraphon, ConstraintPoint, bipodal_densities, symmetric_optimizer
from bipodal.perturbation import entropy_derivs
from bipodal.stationarity import (
    TOL,
    best_over_c,
    entropy_profile,
    entropy_slope,
    fd_profile_derivatives,
    residual_gradient,
    solve_inner,
    stationarity_residual,
    write_profile_csv,
)

unit = st.floats(0.02, 0.98)


def test_residual_vanishes_on_er_family():
    for q in np.linspace(0.05, 0.95, 20):
        for c in np.linspace(0.05, 0.95, 20):
            assert abs(stationarity_residual(q, q, c, q)) < 1e-14


def test_residual_vanishes_at_symmetric_optimizer():
    g = symmetric_optimizer(ConstraintPoint(0.63, 0.2147))
    assert abs(stationarity_residual(g.a, g.b, 0.5, g.d)) < 1e-15


@given(unit, unit, st.floats(0.05, 0.95), unit)
@settings(max_examples=200)
def test_residual_gradient_matches_fd(a, b, c, d):
    grad = residual_gradient(a, b, c, d)
    x = np.array([a, b, c, d])
    h = 1e-6
    for k in range(4):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        fd = (stationarity_residual(*xp) - stationarity_residual(*xm)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_residual_is_lagrange_condition():
    # f = 0 exactly when grad S lies in span(grad e, grad tau) over (a, b, d)
    from bipodal.graphon import so1

    a, b, c, d = 0.31, 0.28, 0.45, 0.93
    q = 1 - c
    ge = [c * c, q * q, 2 * c * q]
    gt = [3 * c**3 * a * a + 3 * c * c * q * d * d, 3 * q**3 * b * b + 3 * c * q * q * d * d,
          6 * c * c * q * a * d + 6 * c * q * q * b * d]
    gs = [c * c * so1(a), q * q * so1(b), 2 * c * q * so1(d)]
    det = np.linalg.det(np.array([gs, ge, gt]))
    f = stationarity_residual(a, b, c, d)
    # both vanish together; their ratio is a fixed positive factor in c
    assert det / f == pytest.approx(6 * c**3 * q**3, rel=1e-10)


def test_inner_at_half_reproduces_symmetric_optimizer():
    for e in np.linspace(0.55, 0.7, 10):
        for t in np.linspace(-0.04, -0.005, 10):
            p = ConstraintPoint.from_t(e, t)
            try:
                g = symmetric_optimizer(p)
            except Exception:
                continue
            sol = solve_inner(p, 0.5)
            assert abs(sol.a - g.a) < 1e-10 and abs(sol.b - g.b) < 1e-10
            assert abs(sol.d - g.d) < 1e-10


def test_converged_solution_reproduces_constraints():
    p = ConstraintPoint(0.6315, 0.2147)
    for c in (0.35, 0.45, 0.5, 0.55, 0.65):
        sol = solve_inner(p, c)
        e, tau, s = bipodal_densities(sol.graphon)
        assert abs(e - p.e) < 1e-11 and abs(tau - p.tau) < 1e-11
        assert s == sol.entropy
        assert max(sol.residuals) <= TOL
        assert sol.curvature <= 0


def test_inner_on_er_curve():
    p = ConstraintPoint(0.4, 0.4**3)
    sol = solve_inner(p, 0.3)
    np.testing.assert_allclose([sol.a, sol.b, sol.d], [0.4, 0.4, 0.4], atol=1e-10)


def test_symmetric_phase_half_is_local_max():
    p = ConstraintPoint(0.63, 0.2184)
    assert entropy_derivs(p).S2 > 0  # this point is past the transition
    p = ConstraintPoint(0.62, 0.21)
    s0 = solve_inner(p, 0.5).entropy
    for dc in (1e-3, 1e-2):
        assert solve_inner(p, 0.5 + dc).entropy < s0


def test_infeasible_c_raises_with_best_attempt():
    p = ConstraintPoint(0.63, 0.2147)
    with pytest.raises(NoConvergenceError) as info:
        solve_inner(p, 0.05)
    assert info.value.best is not None


def test_profile_even_and_asymmetric_maxima():
    p = ConstraintPoint(0.6315, 0.2147)
    cs = np.linspace(0.35, 0.65, 31)
    prof = entropy_profile(p, cs)
    s = np.array([pt.entropy for pt in prof])
    assert np.all(np.isfinite(s))
    assert np.max(np.abs(s - s[::-1])) < 1e-9
    k = int(np.argmax(s))
    assert abs(cs[k] - 0.5) > 0.01


def test_profile_symmetric_phase_peaks_at_half():
    p = ConstraintPoint(0.62, 0.21)
    cs = np.linspace(0.4, 0.6, 21)
    s = [pt.entropy for pt in entropy_profile(p, cs)]
    assert cs[int(np.argmax(s))] == pytest.approx(0.5)


def test_profile_records_failures():
    prof = entropy_profile(ConstraintPoint(0.63, 0.2147), [0.05, 0.5])
    assert np.isnan(prof[0].entropy) and np.isfinite(prof[1].entropy)


def test_entropy_slope_matches_fd():
    p = ConstraintPoint(0.6315, 0.2147)
    c, h = 0.43, 1e-5
    sol = solve_inner(p, c)
    fd = (solve_inner(p, c + h).entropy - solve_inner(p, c - h).entropy) / (2 * h)
    assert entropy_slope(sol.a, sol.b, sol.c, sol.d) == pytest.approx(fd, rel=1e-6)


def test_fd_oracle_h_refinement():
    p = ConstraintPoint(0.63, 0.2147)
    s2 = entropy_derivs(p).S2
    coarse = fd_profile_derivatives(p, h=2e-2, order=2)
    fine = fd_profile_derivatives(p, h=1e-2, order=2)
    assert abs(fine.value - s2) < abs(coarse.value - s2)
    assert fine.error < coarse.error


def test_best_over_c_asymmetric_and_symmetric():
    best, grid_best = best_over_c(ConstraintPoint(0.6315, 0.2147))
    assert best.entropy >= grid_best.entropy
    assert best.c < 0.5
    assert abs(best.c - 0.5) == pytest.approx(0.0279, abs=5e-4)
    best, _ = best_over_c(ConstraintPoint(0.62, 0.21))
    assert best.c == 0.5


def test_write_profile_csv(tmp_path):
    p = ConstraintPoint(0.63, 0.2147)
    prof = entropy_profile(p, [0.05, 0.5])
    path = write_profile_csv(tmp_path / "profile.csv", prof, {"e": 0.63})
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: profile v1"
    assert lines[1] == "c,S,a,b,d,converged"
    assert lines[2].endswith(",0") and lines[3].endswith(",1")
    assert (tmp_path / "profile.csv.json").exists()
