"""Tracing the symmetry-breaking curve S''(1/2) = 0 in the (e, t = tau - e^3) plane."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BipodalError, DomainError, NoSignChangeError, SingularityError
from .fd import richardson_derivative
from .perturbation import ER_GUARD, perturbation_at

log = logging.getLogger(__name__)

E_BRACKET = (0.501, 0.75)
T_WINDOW = (-0.045, -0.001)
N_T = 100
EDGE_MARGIN = 1e-6
N_SCAN = 400
SEED_HALFWIDTH = 0.01
BRACKET_TOL = 1e-13
S2_TOL = 1e-10
H_DERIV = 1e-5


def sgn(x):
    """Sign with sgn(0) = +1."""
    return np.where(np.asarray(x) >= 0.0, 1, -1)


def _width(t: float) -> float:
    if t >= 0.0:
        raise DomainError(f"t must be negative, got {t}")
    w = float(np.cbrt(-t))
    if 2.0 * w < ER_GUARD:
        raise SingularityError(f"t={t} is on the Erdos-Renyi curve to working precision")
    return w


def s2_at(e: float, t: float) -> float:
    w = _width(t)
    return perturbation_at(e - w, e + w).S2


def feasible_interval(t: float, bracket=E_BRACKET) -> tuple[float, float]:
    """Values of e in ``bracket`` for which ``a = e - w`` and ``d = e + w`` stay in (0, 1)."""
    w = _width(t)
    return max(bracket[0], w + EDGE_MARGIN), min(bracket[1], 1.0 - w - EDGE_MARGIN)


@dataclass(frozen=True)
class BoundaryPoint:
    e: float
    tau: float
    t: float
    S2: float
    S4_at: float
    bracket_width: float
    dS2_de: float = float("nan")


@dataclass
class SigmaTrace:
    points: list[BoundaryPoint]
    failures: dict[float, str] = field(default_factory=dict)

    def monotone(self) -> bool:
        """True when e increases as t decreases along the trace."""
        es = [p.e for p in sorted(self.points, key=lambda p: -p.t)]
        return all(x <= y for x, y in zip(es, es[1:]))


def _scan(f, lo, hi, n):
    """First sub-interval of [lo, hi] on which f goes from negative to non-negative."""
    xs = np.linspace(lo, hi, n)
    prev_x, prev_v = None, None
    for x in xs:
        try:
            v = f(x)
        except BipodalError:
            prev_x = prev_v = None
            continue
        if not np.isfinite(v):
            prev_x = prev_v = None
            continue
        if prev_v is not None and prev_v < 0.0 <= v:
            return prev_x, x, prev_v, v
        prev_x, prev_v = x, v
    raise NoSignChangeError(f"no - to + sign change of S'' in [{lo}, {hi}]")


def _bisect_secant(f, lo, hi, flo, fhi):
    while hi - lo > BRACKET_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm < 0.0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    cands = [(abs(flo), lo, flo), (abs(fhi), hi, fhi)]
    if fhi != flo:
        x = lo - flo * (hi - lo) / (fhi - flo)
        if lo <= x <= hi:
            fx = f(x)
            cands.append((abs(fx), x, fx))
    _, x, fx = min(cands)
    return x, fx, hi - lo


def locate(t: float, bracket=E_BRACKET, seed: float | None = None) -> BoundaryPoint:
    """The crossing of S''(1/2) = 0 at fixed ``t`` inside ``bracket``.

    With a ``seed`` (a neighbouring crossing) a narrow window around it is
    scanned first; the full bracket is the fallback.
    """
    lo, hi = feasible_interval(t, bracket)
    if lo >= hi:
        raise NoSignChangeError(f"empty feasible e-range at t={t}")

    def f(e):
        return s2_at(e, t)

    found = None
    if seed is not None:
        slo, shi = max(lo, seed - SEED_HALFWIDTH), min(hi, seed + SEED_HALFWIDTH)
        if slo < shi:
            try:
                found = _scan(f, slo, shi, N_SCAN // 4)
            except NoSignChangeError:
                found = None
    if found is None:
        found = _scan(f, lo, hi, N_SCAN)
    e, s2, width = _bisect_secant(f, *found)
    w = _width(t)
    s4 = perturbation_at(e - w, e + w).S4
    return BoundaryPoint(float(e), float(e**3 + t), float(t), float(s2), float(s4), float(width))


def locate_along_tau(tau: float, bracket=E_BRACKET, n: int = N_SCAN) -> BoundaryPoint:
    """The largest-e crossing of S''(1/2) = 0 (from - to +) at fixed ``tau``.

    A line of fixed tau can meet the transition curve more than once; the
    crossing nearest the far end of ``bracket`` is returned.  Sign changes
    caused by poles are rejected by the residual check after bisection.
    """
    from .graphon import ConstraintPoint
    from .perturbation import entropy_derivs

    def f(e):
        return entropy_derivs(ConstraintPoint(e, tau)).S2

    xs = np.linspace(bracket[0], bracket[1], n)
    vals = []
    for x in xs:
        try:
            v = f(float(x))
        except BipodalError:
            v = math.nan
        vals.append(v)
    for k in range(n - 2, -1, -1):
        v0, v1 = vals[k], vals[k + 1]
        if math.isfinite(v0) and math.isfinite(v1) and v0 < 0.0 <= v1:
            e, s2, width = _bisect_secant(f, float(xs[k]), float(xs[k + 1]), v0, v1)
            if abs(s2) < S2_TOL:
                rep = entropy_derivs(ConstraintPoint(e, tau))
                return BoundaryPoint(float(e), float(tau), float(tau - e**3), float(s2),
                                     float(rep.S4), float(width))
    raise NoSignChangeError(f"no - to + sign change of S'' along tau={tau} in {bracket}")


def trace_sigma(t_grid: Sequence[float], e_bracket=E_BRACKET) -> SigmaTrace:
    """Trace the transition curve over ``t_grid``.

    Values of t are processed from the Erdos-Renyi curve downward, each seeded
    by the previous crossing.  Failures are recorded per t and skipped.
    """
    points = []
    failures = {}
    seed = None
    for t in sorted((float(v) for v in t_grid), reverse=True):
        try:
            pt = locate(t, e_bracket, seed)
        except BipodalError as exc:
            failures[t] = str(exc)
            log.info("no crossing at t=%g: %s", t, exc)
            continue
        points.append(pt)
        seed = pt.e
    points.sort(key=lambda p: p.t)
    trace = SigmaTrace(points, failures)
    if points and not trace.monotone():
        log.warning("traced curve is not monotone in e over the t window")
    return trace


def default_t_grid(t_min=T_WINDOW[0], t_max=T_WINDOW[1], n=N_T) -> np.ndarray:
    """Log-spaced t values between ``t_min`` and ``t_max`` (both negative)."""
    return -np.geomspace(-t_max, -t_min, n)


def ds2_de(e: float, t: float, h: float = H_DERIV):
    """Derivative of S''(1/2) in e at fixed t (Richardson-extrapolated central difference)."""
    w = _width(t)
    return richardson_derivative(
        lambda es: [perturbation_at(x - w, x + w).S2 for x in es], e, h, 1
    )


def sigma_derivative(points: Sequence[BoundaryPoint], h: float = H_DERIV) -> list[BoundaryPoint]:
    return [replace(p, dS2_de=float(ds2_de(p.e, p.t, h).value)) for p in points]


@dataclass
class SignMap:
    e_grid: np.ndarray
    t_grid: np.ndarray
    S2: np.ndarray
    S4: np.ndarray
    sgn_S2: np.ndarray
    sgn_S4: np.ndarray
    flagged: np.ndarray

    def rows(self):
        for i, t in enumerate(self.t_grid):
            for j, e in enumerate(self.e_grid):
                yield (e, t, self.S2[i, j], self.S4[i, j],
                       int(self.sgn_S2[i, j]), int(self.sgn_S4[i, j]), bool(self.flagged[i, j]))


def sign_map(e_grid: Sequence[float], t_grid: Sequence[float]) -> SignMap:
    """S''(1/2) and S''''(1/2) on a grid, indexed ``[t, e]``.

    Cells that are degenerate or leave the unit square are flagged, their
    values set to nan and their signs to 0.
    """
    e_grid = np.asarray(e_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    shape = (t_grid.size, e_grid.size)
    s2 = np.full(shape, np.nan)
    s4 = np.full(shape, np.nan)
    for i, t in enumerate(t_grid):
        for j, e in enumerate(e_grid):
            try:
                w = _width(t)
                if not (0.0 < e - w and e + w < 1.0):
                    continue
                r = perturbation_at(e - w, e + w)
            except BipodalError:
                continue
            if math.isfinite(r.S2) and math.isfinite(r.S4):
                s2[i, j], s4[i, j] = r.S2, r.S4
    flagged = ~np.isfinite(s2)
    sg2 = np.where(flagged, 0, sgn(np.nan_to_num(s2)))
    sg4 = np.where(flagged, 0, sgn(np.nan_to_num(s4)))
    return SignMap(e_grid, t_grid, s2, s4, sg2, sg4, flagged)
