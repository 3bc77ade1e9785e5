"""Fixed-c constrained entropy maximization for bipodal graphons.

At fixed pod fraction ``c`` the entropy is maximized over ``(a, b, d)``
subject to the edge and triangle constraints.  Lagrange stationarity is
equivalent to the vanishing of a scalar residual ``f(a, b, c, d)``, so the
inner problem is the square system ``(e - e0, tau - tau0, f) = 0`` which is
solved by damped Newton with an analytic Jacobian.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.stats import qmc

from .errors import InfeasibleError, NoConvergenceError
from .fd import FDEstimate, richardson_derivative
from .graphon import (
    CLAMP,
    CLAMP_REPORT,
    BipodalGraphon,
    ConstraintPoint,
    bipodal_densities,
    so,
    so1,
    so2,
    symmetric_optimizer,
)

log = logging.getLogger(__name__)

TOL = 1e-12
MAX_ITER = 200
MAX_HALVINGS = 40
STALL_WINDOW = 15
N_PERTURBED = 8
PERTURB_RADIUS = 0.2
CURVATURE_TOL = 1e-8
SYM_GAP = 1e-7
ROOT_DEDUP = 1e-7
TIE_TOL = 1e-12

H_S2 = 1e-2
H_S4 = 1.5e-2


def stationarity_residual(a, b, c, d):
    """Residual f whose zero set is the Lagrange condition at fixed c."""
    q = 1.0 - c
    return (
        so1(a) * (c * d * (a - d) - q * b * (b - d))
        + so1(b) * (c * a * (a - d) - q * d * (b - d))
        + so1(d) * (c * (d * d - a * a) + q * (b * b - d * d))
    )


def residual_gradient(a, b, c, d):
    """Partial derivatives ``(f_a, f_b, f_c, f_d)`` at a general point."""
    q = 1.0 - c
    s1a, s1b, s1d = so1(a), so1(b), so1(d)
    s2a, s2b, s2d = so2(a), so2(b), so2(d)
    fa = (
        s2a * (c * d * (a - d) - q * b * (b - d))
        + s1a * c * d
        + s1b * (2.0 * a * c - c * d)
        - s1d * 2.0 * a * c
    )
    fb = (
        s2b * (c * a * (a - d) - q * d * (b - d))
        + s1a * (q * d - 2.0 * q * b)
        - s1b * q * d
        + s1d * 2.0 * q * b
    )
    fc = (
        s1a * (a * d - d * d + b * b - b * d)
        + s1b * (a * a - a * d + b * d - d * d)
        + s1d * (2.0 * d * d - a * a - b * b)
    )
    fd = (
        s2d * (c * (d * d - a * a) + q * (b * b - d * d))
        + s1a * (-2.0 * c * d + a * c + q * b)
        + s1b * (-a * c + 2.0 * q * d - q * b)
        + s1d * (2.0 * c * d - 2.0 * q * d)
    )
    return fa, fb, fc, fd


def _constraint_gradients(a, b, c, d):
    q = 1.0 - c
    grad_e = np.array([c * c, q * q, 2.0 * c * q])
    grad_tau = np.array(
        [
            3.0 * c**3 * a * a + 3.0 * c * c * q * d * d,
            3.0 * q**3 * b * b + 3.0 * c * q * q * d * d,
            6.0 * c * c * q * a * d + 6.0 * c * q * q * b * d,
        ]
    )
    return grad_e, grad_tau


def entropy_slope(a, b, c, d) -> float:
    """dS/dc along the curve of fixed-c maximizers through ``(a, b, c, d)``.

    At a constrained stationary point the ``(a, b, d)`` variations drop out
    (envelope theorem), leaving the explicit c-derivative of the Lagrangian.
    """
    q = 1.0 - c
    grad_e, grad_tau = _constraint_gradients(a, b, c, d)
    grad_s = np.array([c * c * so1(a), q * q * so1(b), 2.0 * c * q * so1(d)])
    lam = np.linalg.lstsq(np.column_stack([grad_e, grad_tau]), grad_s, rcond=None)[0]
    ds = 2.0 * c * so(a) - 2.0 * q * so(b) + 2.0 * (1.0 - 2.0 * c) * so(d)
    de = 2.0 * c * a - 2.0 * q * b + 2.0 * (1.0 - 2.0 * c) * d
    dt = (3.0 * c * c * a**3 + 3.0 * (2.0 * c * q - c * c) * a * d * d
          + 3.0 * (q * q - 2.0 * c * q) * b * d * d - 3.0 * q * q * b**3)
    return float(ds - lam[0] * de - lam[1] * dt)


def _system(x, c, e0, tau0):
    a, b, d = x
    e, tau, _ = bipodal_densities(BipodalGraphon(a, b, c, d))
    return np.array([e - e0, tau - tau0, stationarity_residual(a, b, c, d)])


def _jacobian(x, c):
    a, b, d = x
    grad_e, grad_tau = _constraint_gradients(a, b, c, d)
    fa, fb, _, fd = residual_gradient(a, b, c, d)
    return np.vstack([grad_e, grad_tau, [fa, fb, fd]])


def slice_curvature(a, b, c, d):
    """Curvature of the Lagrangian along the one-dimensional constraint curve.

    Non-positive values mean the point is a local entropy maximum within the
    fixed-c slice.
    """
    q = 1.0 - c
    grad_e, grad_tau = _constraint_gradients(a, b, c, d)
    grad_s = np.array([c * c * so1(a), q * q * so1(b), 2.0 * c * q * so1(d)])
    tangent = np.cross(grad_e, grad_tau)
    norm = np.linalg.norm(tangent)
    if norm == 0.0:
        return 0.0
    tangent /= norm
    lam, *_ = np.linalg.lstsq(np.column_stack([grad_e, grad_tau]), grad_s, rcond=None)
    hess_s = np.diag([c * c * so2(a), q * q * so2(b), 2.0 * c * q * so2(d)])
    hess_tau = np.array(
        [
            [6.0 * c**3 * a, 0.0, 6.0 * c * c * q * d],
            [0.0, 6.0 * q**3 * b, 6.0 * c * q * q * d],
            [6.0 * c * c * q * d, 6.0 * c * q * q * d, 6.0 * c * c * q * a + 6.0 * c * q * q * b],
        ]
    )
    return float(tangent @ (hess_s - lam[1] * hess_tau) @ tangent)


@dataclass(frozen=True)
class InnerSolution:
    """Result of the fixed-c solve.  ``residuals`` are |e-e0|, |tau-tau0|, |f|."""

    a: float
    b: float
    d: float
    c: float
    entropy: float
    residuals: tuple
    iterations: int
    converged: bool
    clamped: bool
    curvature: float = float("nan")
    n_roots: int = 1

    @property
    def graphon(self) -> BipodalGraphon:
        return BipodalGraphon(self.a, self.b, self.c, self.d)

    @property
    def x(self) -> np.ndarray:
        return np.array([self.a, self.b, self.d])

    @property
    def exchanged_x(self) -> np.ndarray:
        """``(a, b, d)`` after swapping the pods (the solution at ``1 - c``)."""
        return np.array([self.b, self.a, self.d])


def _newton(x0, c, e0, tau0, tol, max_iter, max_halvings):
    lo, hi = CLAMP, 1.0 - CLAMP
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    clamped = bool(np.any(np.abs(x - np.asarray(x0)) > CLAMP_REPORT))
    F = _system(x, c, e0, tau0)
    norm = np.max(np.abs(F))
    history = [norm]
    it = 0
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return x, F, it - 1, True, clamped
        if len(history) > STALL_WINDOW and norm > 0.5 * history[-STALL_WINDOW - 1]:
            # creeping along the box boundary; no interior root nearby
            break
        try:
            step = np.linalg.solve(_jacobian(x, c), F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        lam = 1.0
        for _ in range(max_halvings):
            trial = x - lam * step
            clipped = np.clip(trial, lo, hi)
            Fn = _system(clipped, c, e0, tau0)
            nn = np.max(np.abs(Fn))
            if np.isfinite(nn) and nn < (1.0 - 1e-4 * lam) * norm:
                if np.any(np.abs(clipped - trial) > CLAMP_REPORT):
                    clamped = True
                x, F, norm = clipped, Fn, nn
                history.append(norm)
                break
            lam *= 0.5
        else:
            break
    return x, F, it, bool(norm <= tol), clamped


def _starts(p: ConstraintPoint, init):
    try:
        sym = symmetric_optimizer(p)
        base = np.array([sym.a, sym.b, sym.d])
    except InfeasibleError:
        base = np.array([p.e, p.e, p.e])
    starts = [base]
    if init is not None:
        starts.append(np.asarray(init, dtype=float))
    u = qmc.Halton(d=3, scramble=False).random(N_PERTURBED + 1)[1:]
    for row in u:
        starts.append(np.clip(base + PERTURB_RADIUS * (2.0 * row - 1.0), 0.01, 0.99))
    return starts


def solve_inner(
    p: ConstraintPoint,
    c: float,
    init=None,
    *,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    max_halvings: int = MAX_HALVINGS,
) -> InnerSolution:
    """Maximize entropy over ``(a, b, d)`` at fixed ``c`` under the constraints.

    Every start of the multi-start schedule (symmetric closed form, the
    optional ``init`` and quasi-random perturbations) is run to convergence.
    Converged roots failing the second-order test are discarded, and the
    remaining root of largest entropy is returned; entropy ties go to the
    root with smaller ``|a - b|``.

    Raises
    ------
    NoConvergenceError
        If no start converges.
    """
    e0, tau0 = p.e, p.tau
    roots = []
    best_fail = None
    for x0 in _starts(p, init):
        x, F, its, ok, clamped = _newton(x0, c, e0, tau0, tol, max_iter, max_halvings)
        a, b, d = (float(v) for v in x)
        sol = InnerSolution(
            a, b, d, float(c),
            bipodal_densities(BipodalGraphon(a, b, c, d))[2],
            tuple(float(abs(v)) for v in F), its, ok, clamped,
        )
        if not ok:
            if best_fail is None or max(sol.residuals) < max(best_fail.residuals):
                best_fail = sol
            continue
        if any(np.max(np.abs(r.x - x)) < ROOT_DEDUP for r in roots):
            continue
        roots.append(sol)
    if not roots:
        raise NoConvergenceError(
            f"inner solve failed at c={c} for (e, tau)=({e0}, {tau0})", best=best_fail
        )

    scored = [(r, slice_curvature(r.a, r.b, c, r.d)) for r in roots]
    admissible = [(r, k) for r, k in scored if k <= CURVATURE_TOL]
    if not admissible:
        log.warning("no root passes the second-order test at c=%g; using all roots", c)
        admissible = scored
    top = max(r.entropy for r, _ in admissible)
    tied = [(r, k) for r, k in admissible if top - r.entropy < TIE_TOL]
    if len(tied) > 1:
        log.debug("entropy tie between %d roots at c=%g; taking smallest |a-b|", len(tied), c)
    best, curv = min(tied, key=lambda rk: abs(rk[0].a - rk[0].b))
    if len(roots) > 1:
        log.debug("%d distinct roots at c=%g", len(roots), c)
    return InnerSolution(
        best.a, best.b, best.d, best.c, best.entropy, best.residuals,
        best.iterations, True, best.clamped, curv, len(roots),
    )


class ProfilePoint(NamedTuple):
    c: float
    entropy: float
    solution: InnerSolution | None


def entropy_profile(p: ConstraintPoint, c_grid: Sequence[float], init=None) -> list[ProfilePoint]:
    """Entropy maximum S(c) along ``c_grid`` with continuation between points.

    Failed points are recorded with ``nan`` entropy rather than raised.
    """
    out = []
    prev = init
    for c in c_grid:
        try:
            sol = solve_inner(p, float(c), prev)
        except NoConvergenceError as exc:
            log.info("profile point c=%g did not converge", c)
            sol = exc.best
            out.append(ProfilePoint(float(c), float("nan"), sol))
            continue
        prev = sol.x
        out.append(ProfilePoint(float(c), sol.entropy, sol))
    return out


def _branch(p: ConstraintPoint, cs: np.ndarray) -> list[InnerSolution]:
    """Solutions at each c, continued outward from c = 1/2 on either side."""
    sols: dict[float, InnerSolution] = {}
    centre = solve_inner(p, 0.5)
    for side in (1.0, -1.0):
        prev = centre.x
        for c in sorted({float(v) for v in cs if (v - 0.5) * side > 0}, key=lambda v: abs(v - 0.5)):
            sol = solve_inner(p, c, prev)
            sols[c] = sol
            prev = sol.x
    return [centre if float(c) == 0.5 else sols[float(c)] for c in cs]


def fd_profile_derivatives(p: ConstraintPoint, h: float | None = None, order: int = 2) -> FDEstimate:
    """Finite-difference estimate of the ``order``-th c-derivative of S at 1/2."""
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if h is None:
        h = H_S2 if order == 2 else H_S4
    return richardson_derivative(
        lambda cs: [s.entropy for s in _branch(p, cs)], 0.5, h, order
    )


def fd_branch_derivatives(p: ConstraintPoint, h: float, order: int) -> FDEstimate:
    """Finite-difference derivative of ``(a, b, d)`` along the constrained curve at c = 1/2."""
    return richardson_derivative(lambda cs: [s.x for s in _branch(p, cs)], 0.5, h, order)


def best_over_c(p: ConstraintPoint, n_grid: int = 41, c_range=(0.05, 0.95), refine: bool = True):
    """Best bipodal entropy over c: a grid scan followed by refinement.

    Refinement finds the root of the analytic slope dS/dc next to the best
    grid point; by exchange symmetry it works on ``c <= 1/2`` and the
    refined solution is reported with ``c <= 1/2``.  Returns
    ``(solution, grid_best)`` where ``grid_best`` is the best grid point.
    """
    grid = np.linspace(c_range[0], c_range[1], n_grid)
    # March outward from the middle so continuation follows the central branch.
    mid = int(np.argmin(np.abs(grid - 0.5)))
    profile = entropy_profile(p, grid[mid:]) + entropy_profile(p, grid[:mid][::-1])
    ok = [pt for pt in profile if pt.solution is not None and np.isfinite(pt.entropy)]
    if not ok:
        raise NoConvergenceError(f"no bipodal solution on the c grid at ({p.e}, {p.tau})")
    grid_best = max(ok, key=lambda pt: pt.entropy).solution
    if not refine:
        return grid_best, grid_best
    step = grid[1] - grid[0]
    # S(c) = S(1 - c), so search c <= 1/2 where c = 1/2 is an endpoint
    c_g = min(grid_best.c, 1.0 - grid_best.c)
    lo = max(c_g - step, min(c_range[0], 1.0 - c_range[1]))
    hi = 0.5 - SYM_GAP
    cache = {}

    def solve(c):
        if c not in cache:
            try:
                cache[c] = solve_inner(p, c, grid_best.exchanged_x if grid_best.c > 0.5 else grid_best.x)
            except NoConvergenceError:
                cache[c] = None
        return cache[c]

    def slope(c):
        sol = solve(c)
        if sol is None:
            raise NoConvergenceError(f"inner solve failed at c={c}")
        return entropy_slope(sol.a, sol.b, sol.c, sol.d)

    best = None
    try:
        if slope(hi) >= 0.0:
            # rising all the way to the symmetric point
            best = solve(0.5)
        elif slope(lo) > 0.0:
            c_star = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            # a root pinned to the bracket edge is the symmetric point itself
            best = solve(0.5 if hi - c_star < SYM_GAP else c_star)
    except NoConvergenceError:
        best = None
    if best is None:

        def neg(c):
            sol = solve(c)
            return math.inf if sol is None else -sol.entropy

        res = minimize_scalar(neg, bounds=(lo, 0.5), method="bounded", options={"xatol": 1e-10})
        best = solve(res.x)
    if best is None or best.entropy < grid_best.entropy:
        best = grid_best
    return best, grid_best


def write_profile_csv(path, profile: Sequence[ProfilePoint], settings: dict | None = None) -> Path:
    """Write ``c, S, a, b, d, converged`` rows plus a JSON sidecar of solver settings."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# schema: profile v1\n")
        writer = csv.writer(fh)
        writer.writerow(["c", "S", "a", "b", "d", "converged"])
        for pt in profile:
            s = pt.solution
            if s is None:
                writer.writerow([repr(pt.c), "nan", "nan", "nan", "nan", 0])
            else:
                ok = int(s.converged and np.isfinite(pt.entropy))
                writer.writerow([repr(pt.c), repr(pt.entropy), repr(s.a), repr(s.b), repr(s.d), ok])
    sidecar = {
        "tol": TOL,
        "max_iter": MAX_ITER,
        "max_halvings": MAX_HALVINGS,
        "n_perturbed": N_PERTURBED,
        "perturb_radius": PERTURB_RADIUS,
        "clamp": CLAMP,
    }
    sidecar.update(settings or {})
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def solution_dict(sol: InnerSolution) -> dict:
    return asdict(sol)
