import logging

import numpy as np
import pytest

from bipodal.boundary import (
    default_t_grid,
    ds2_de,
    feasible_interval,
    locate,
    locate_along_tau,
    s2_at,
    sign_map,
    sgn,
    trace_sigma,
)
from bipodal.errors import DomainError, NoSignChangeError, SingularityError


def test_sgn_zero_is_positive():
    np.testing.assert_array_equal(sgn([-1.0, 0.0, 2.0]), [-1, 1, 1])


def test_locate_known_sections():
    pt = locate(-0.0348)
    assert pt.e == pytest.approx(0.62950, abs=5e-5)
    assert abs(pt.S2) < 1e-10 and pt.bracket_width < 1e-10
    assert pt.S4_at < 0
    assert locate(-0.03).e == pytest.approx(0.62862, abs=5e-5)


def test_sign_flips_across_crossing():
    pt = locate(-0.02)
    assert s2_at(pt.e - 1e-4, pt.t) < 0 < s2_at(pt.e + 1e-4, pt.t)


def test_locate_along_tau_agrees_with_t_sections():
    for tau in (0.2147, 0.2184):
        pt = locate_along_tau(tau)
        assert abs(pt.S2) < 1e-10
        assert locate(pt.t).e == pytest.approx(pt.e, abs=1e-9)


def test_locate_without_crossing():
    with pytest.raises(NoSignChangeError):
        locate(-0.0348, bracket=(0.501, 0.6))


def test_width_domain():
    with pytest.raises(DomainError):
        s2_at(0.6, 0.01)
    with pytest.raises(SingularityError):
        s2_at(0.6, -1e-30)


def test_feasible_interval_keeps_blocks_inside():
    lo, hi = feasible_interval(-0.03)
    w = np.cbrt(0.03)
    assert lo - w > 0 and hi + w < 1


def test_default_grid():
    g = default_t_grid()
    assert g.size == 100 and g.min() == pytest.approx(-0.045) and g.max() == pytest.approx(-0.001)


def test_trace_small_grid_and_monotonicity_finding(caplog):
    grid = default_t_grid(n=12)
    with caplog.at_level(logging.WARNING, logger="bipodal.boundary"):
        trace = trace_sigma(grid)
    assert len(trace.points) == 12 and not trace.failures
    assert all(abs(p.S2) < 1e-10 for p in trace.points)
    assert [p.t for p in trace.points] == sorted(p.t for p in trace.points)
    # e along the curve turns back near t = -0.035: logged, not an error
    assert not trace.monotone()
    assert "not monotone" in caplog.text


def test_trace_records_failures():
    trace = trace_sigma([-0.03, -0.0348], e_bracket=(0.501, 0.6))
    assert not trace.points and len(trace.failures) == 2


def test_ds2_de_positive_on_curve():
    for t in (-0.04, -0.02, -0.005):
        pt = locate(t)
        assert ds2_de(pt.e, t).value > 0


def test_sign_map_shape_and_flags():
    es = np.linspace(0.55, 0.75, 5)
    ts = np.array([-0.04, -0.02])
    sm = sign_map(es, ts)
    assert sm.S2.shape == (2, 5)
    # e = 0.75 at t = -0.04 puts d = e + w above 1
    assert sm.flagged[0, -1] and sm.sgn_S2[0, -1] == 0
    assert np.all(np.isin(sm.sgn_S2[~sm.flagged], [-1, 1]))
    assert len(list(sm.rows())) == 10
