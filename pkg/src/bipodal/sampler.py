"""Random-restart entropy maximization over M-podal graphons.

Nothing here assumes two pods.  Each restart draws a random M-podal graphon,
repairs it onto the constraint surface, climbs with projected gradient
ascent, and then tries coarser pod structures (dropping tiny pods, merging
near-identical ones), keeping whichever KKT-polished candidate has the
largest entropy.  Podality is read off the final canonical form.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BipodalError, InfeasibleError, NoConvergenceError
from .graphon import (
    MERGE_TOL,
    ConstraintPoint,
    MultipodalGraphon,
    canonicalize,
    multipodal_densities,
    so,
    so1,
    symmetric_optimizer,
)

log = logging.getLogger(__name__)

P_MARGIN = 1e-9
PROJ_TOL = 1e-13
REDUCE_TOLS = (MERGE_TOL, 1e-3, 1e-2, 3e-2, 1e-1)
REDUCE_SLACK = 1e-11
SADDLE_TOL = 1e-9
POLISH_MAX_PODS = 6
MAX_REPAIRS = 200


@dataclass(frozen=True)
class SamplerConfig:
    M: int = 16
    budget: int = 200_000
    restarts: int = 64
    constraint_tol: float = 1e-8
    seed: int = 0
    refine_steps: int = 500
    merge_tol: float = MERGE_TOL
    workers: int = 1

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be at least 2")
        if self.restarts < 1 or self.budget < 1:
            raise ValueError("restarts and budget must be positive")


@dataclass
class SamplerResult:
    best: MultipodalGraphon
    entropy: float
    podality: int
    c_estimate: float | None
    constraint_residual: float
    evaluations: int
    gap_to_bipodal_solver: float | None = None
    chain_stats: list = field(default_factory=list)

    def bipodal_blocks(self):
        """``(c, a, b, d)`` with pod 1 the smaller pod, or None unless bipodal."""
        if self.podality != 2:
            return None
        c, p = self.best.sizes, self.best.p
        i, j = (1, 0) if c[1] <= c[0] else (0, 1)
        return float(c[i]), float(p[i, i]), float(p[j, j]), float(p[i, j])


class _Counter:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    @property
    def exhausted(self):
        return self.used >= self.limit


class _Space:
    """Packed coordinates ``x = (sizes, upper triangle of p)`` for m pods."""

    def __init__(self, m):
        self.m = m
        self.iu = np.triu_indices(m)
        self.il = np.tril_indices(m, -1)
        self.mult = np.where(self.iu[0] == self.iu[1], 1.0, 2.0)
        self.n = m + self.iu[0].size
        self.gsum = np.concatenate([np.ones(m), np.zeros(self.n - m)])

    def pack(self, c, P):
        return np.concatenate([c, P[self.iu]])

    def unpack(self, x):
        m = self.m
        c = x[:m]
        P = np.empty((m, m))
        P[self.iu] = x[m:]
        P[self.il] = P.T[self.il]
        return c, P

    def evaluate(self, x, counter=None):
        """Entropy, constraint values and their gradients in packed coordinates."""
        if counter is not None:
            counter.used += 1
        c, P = self.unpack(x)
        iu, mult = self.iu, self.mult
        C2 = np.outer(c, c)
        M1 = (P * c[None, :]) @ P
        # p stays inside (0, 1) by construction, so skip the validated helpers
        lp, lq = np.log(P), np.log1p(-P)
        soP = -0.5 * (P * lp + (1.0 - P) * lq)
        dso = -0.5 * (lp - lq)
        S = c @ soP @ c
        e = c @ P @ c
        tau = c @ ((M1 * P) @ c)
        gS = np.concatenate([2.0 * soP @ c, C2[iu] * dso[iu] * mult])
        ge = np.concatenate([2.0 * P @ c, C2[iu] * mult])
        gt = np.concatenate([3.0 * (M1 * P) @ c, 3.0 * C2[iu] * M1[iu] * mult])
        return S, np.array([e, tau, c.sum()]), gS, np.vstack([ge, gt, self.gsum])

    def inv_metric(self, x):
        """Natural preconditioner: size-weighted for pods, block-mass for p."""
        c = x[: self.m]
        blocks = np.outer(c, c)[self.iu] * self.mult
        return np.concatenate([np.maximum(c, 0.0) + 1e-12, 1.0 / (blocks + 1e-10)])

    def clip(self, x):
        x = x.copy()
        x[: self.m] = np.maximum(x[: self.m], 0.0)
        x[self.m:] = np.clip(x[self.m:], P_MARGIN, 1.0 - P_MARGIN)
        return x


def _pushing_out(space, x, step):
    """Coordinates sitting on a bound that ``x - step`` would push further out."""
    m = space.m
    new = x - step
    out = np.zeros(x.size, dtype=bool)
    out[:m] = (x[:m] <= 0.0) & (new[:m] < 0.0)
    p, q = x[m:], new[m:]
    edge = P_MARGIN * (1.0 + 1e-6)
    out[m:] = ((p <= edge) & (q < p)) | ((p >= 1.0 - edge) & (q > p))
    return out


def _project(space, x, target, counter, mask=None, max_iter=30):
    """Newton restoration onto ``e = e0, tau = tau0, sum(c) = 1``.

    Steps are minimum-norm in the natural metric; ``mask`` freezes
    coordinates, and coordinates held at a bound by the step are frozen as
    well (an active-set rule, without which clipping stalls the iteration).
    Returns ``None`` if the residual does not fall below ``PROJ_TOL``.
    """
    base = np.ones(x.size) if mask is None else np.asarray(mask, dtype=float)
    for _ in range(max_iter):
        _, h, _, J = space.evaluate(x, counter)
        r = h - target
        norm = np.max(np.abs(r))
        if norm < PROJ_TOL:
            return x
        G0 = space.inv_metric(x) * base
        free = np.ones(x.size, dtype=bool)
        for _ in range(8):
            JG = J * (G0 * free)
            try:
                mu = np.linalg.lstsq(JG @ J.T, r, rcond=1e-12)[0]
            except np.linalg.LinAlgError:
                log.debug("projection failed: singular constraint Jacobian")
                return None
            step = JG.T @ mu
            blocked = _pushing_out(space, x, step) & free
            if not blocked.any():
                break
            free &= ~blocked
        lam = 1.0
        for _ in range(30):
            trial = space.clip(x - lam * step)
            _, ht, _, _ = space.evaluate(trial, counter)
            if np.max(np.abs(ht - target)) < norm:
                x = trial
                break
            lam *= 0.5
        else:
            return None
    _, h, _, _ = space.evaluate(x, counter)
    return x if np.max(np.abs(h - target)) < PROJ_TOL else None


def _ascent_direction(space, x, gS, J):
    G = space.inv_metric(x)
    JG = J * G
    mu = np.linalg.lstsq(JG @ J.T, JG @ gS, rcond=1e-12)[0]
    return G * (gS - J.T @ mu)


def _refine(space, x, target, steps, counter):
    """Projected gradient ascent; entropy never decreases between accepted steps."""
    S, _, gS, J = space.evaluate(x, counter)
    s = 1e-2
    for _ in range(steps):
        if counter.exhausted:
            break
        v = _ascent_direction(space, x, gS, J)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) < 1e-14:
            break
        accepted = False
        while s > 1e-14:
            trial = _project(space, space.clip(x + s * v), target, counter)
            if trial is not None:
                St, _, gSt, Jt = space.evaluate(trial, counter)
                if St >= S:
                    x, S, gS, J = trial, St, gSt, Jt
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            break
        s = min(4.0 * s, 1.0)
    return x, S


def local_refine(g: MultipodalGraphon, p: ConstraintPoint, steps: int = 500) -> MultipodalGraphon:
    """Projected-gradient polish of a near-feasible graphon.

    Entropy is non-decreasing over accepted steps and every iterate is
    re-projected onto the constraint surface.  Pods that end up below the
    merge tolerance (or duplicated) are collapsed, provided the collapsed
    graphon can be projected back onto the constraints.
    """
    space = _Space(g.m)
    target = np.array([p.e, p.tau, 1.0])
    counter = _Counter(math.inf)
    x = _project(space, space.clip(space.pack(g.sizes, g.p)), target, counter)
    if x is None:
        raise InfeasibleError("could not project the starting graphon onto the constraints")
    x, S = _refine(space, x, target, steps, counter)
    c, P = space.unpack(x)
    out = MultipodalGraphon(c / c.sum(), np.clip(P, 0.0, 1.0))
    red = canonicalize(out, MERGE_TOL)
    if red.m < out.m and red.m > 1:
        rs = _Space(red.m)
        y = _project(rs, rs.clip(rs.pack(red.sizes, red.p)), target, counter)
        if y is not None:
            c, P = rs.unpack(y)
            cand = MultipodalGraphon(c / c.sum(), np.clip(P, 0.0, 1.0))
            if multipodal_densities(cand)[2] >= S - REDUCE_SLACK:
                return cand
    return out


def _lagrangian_hessian(space, x, lam, counter):
    n = space.n
    H = np.empty((n, n))
    for k in range(n):
        step = 1e-6 * max(1.0, abs(x[k]))
        if k >= space.m:
            # keep both probes inside (0, 1)
            step = min(step, 0.5 * min(x[k], 1.0 - x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += step
        xm[k] -= step
        _, _, gp, Jp = space.evaluate(xp, counter)
        _, _, gm, Jm = space.evaluate(xm, counter)
        H[:, k] = ((gp - Jp.T @ lam) - (gm - Jm.T @ lam)) / (2.0 * step)
    return 0.5 * (H + H.T)


def _null_space(J):
    _, sv, vt = np.linalg.svd(J)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    return vt[rank:].T


def _polish(space, x, target, counter, max_iter=40):
    """Newton iteration on the KKT system.  Returns ``(x, curvature)`` or None.

    ``curvature`` is the largest eigenvalue of the Lagrangian Hessian on the
    constraint tangent space; it is <= 0 at a local maximum.
    """
    S, h, gS, J = space.evaluate(x, counter)
    lam = np.linalg.lstsq(J.T, gS, rcond=None)[0]
    m = space.m
    for _ in range(max_iter):
        S, h, gS, J = space.evaluate(x, counter)
        F = np.concatenate([gS - J.T @ lam, h - target])
        if np.max(np.abs(F)) < 1e-12:
            break
        H = _lagrangian_hessian(space, x, lam, counter)
        K = np.block([[H, -J.T], [J, np.zeros((3, 3))]])
        try:
            delta = np.linalg.solve(K, -F)
        except np.linalg.LinAlgError:
            return None
        dx, dlam = delta[: space.n], delta[space.n:]
        t = 1.0
        norm = np.max(np.abs(F))
        for _ in range(20):
            xt = x + t * dx
            if np.all(xt[:m] > 0.0) and np.all((xt[m:] > 0.0) & (xt[m:] < 1.0)):
                St, ht, gSt, Jt = space.evaluate(xt, counter)
                lt = lam + t * dlam
                Ft = np.concatenate([gSt - Jt.T @ lt, ht - target])
                if np.max(np.abs(Ft)) < norm or t < 1e-3:
                    break
            t *= 0.5
        else:
            return None
        x, lam = xt, lt
    S, h, gS, J = space.evaluate(x, counter)
    if np.max(np.abs(h - target)) > 1e-12 or np.any(x[:m] <= 0.0):
        return None
    Z = _null_space(J)
    H = _lagrangian_hessian(space, x, lam, counter)
    curv = float(np.max(np.linalg.eigvalsh(Z.T @ H @ Z))) if Z.shape[1] else 0.0
    return x, curv, Z, H


def _polish_max(space, x, target, counter, escapes=4):
    """KKT polish with saddle escape along the direction of positive curvature."""
    for _ in range(escapes + 1):
        out = _polish(space, x, target, counter)
        if out is None:
            return None
        xp, curv, Z, H = out
        if curv <= SADDLE_TOL:
            return xp
        w, V = np.linalg.eigh(Z.T @ H @ Z)
        direction = Z @ V[:, -1]
        best = None
        for sign in (1.0, -1.0):
            for size in (1e-2, 3e-3, 1e-3):
                trial = _project(space, space.clip(xp + sign * size * direction), target, counter)
                if trial is None:
                    continue
                trial, St = _refine(space, trial, target, 100, _Counter(math.inf))
                if best is None or St > best[1]:
                    best = (trial, St)
                break
        if best is None:
            return None
        x = best[0]
    return None


def _settle(g: MultipodalGraphon, target, counter):
    """Project, then polish (few pods) or refine (many pods) at fixed podality."""
    if g.m == 1:
        q = float(target[0])
        if abs(q**3 - target[1]) < PROJ_TOL:
            return MultipodalGraphon([1.0], [[q]]), float(so(q))
        return None
    space = _Space(g.m)
    x = _project(space, space.clip(space.pack(g.sizes, g.p)), target, counter)
    if x is None:
        return None
    if g.m <= POLISH_MAX_PODS:
        x = _polish_max(space, x, target, counter)
        if x is None:
            return None
    else:
        x, _ = _refine(space, x, target, 200, counter)
    c, P = space.unpack(x)
    out = MultipodalGraphon(c / c.sum(), np.clip(P, 0.0, 1.0))
    return out, multipodal_densities(out)[2]


def _reduce_and_polish(g: MultipodalGraphon, target, counter, entropy):
    """Greedy coarsening: accept the first merge that costs no entropy, repeat.

    Candidates come from canonicalizing at increasing tolerances; each is
    re-settled on the constraint surface before its entropy is compared.
    Returns ``(graphon, entropy)``; a final polish is attempted even if no
    merge is accepted.
    """
    current, S = g, entropy
    polished = False
    while True:
        for tol in REDUCE_TOLS:
            red = canonicalize(current, tol)
            if red.m >= current.m:
                continue
            out = _settle(red, target, counter)
            if out is not None and out[1] >= S - REDUCE_SLACK:
                current, S = out
                polished = current.m <= POLISH_MAX_PODS
                break
        else:
            break
    if not polished and current.m <= POLISH_MAX_PODS:
        out = _settle(current, target, counter)
        if out is not None and out[1] >= S - REDUCE_SLACK:
            current, S = out
    return current, S


def _random_start(rng, M):
    c = rng.dirichlet(np.ones(M))
    U = rng.uniform(0.0, 1.0, (M, M))
    P = np.triu(U) + np.triu(U, 1).T
    return c, P


def _run_chain(args):
    """One restart: random start, repair, ascent, coarsening and polish."""
    e0, tau0, M, steps, limit, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    counter = _Counter(limit)
    space = _Space(M)
    target = np.array([e0, tau0, 1.0])
    mask = np.concatenate([np.zeros(M), np.ones(space.n - M)])
    x = None
    for _ in range(MAX_REPAIRS):
        if counter.exhausted:
            break
        counter.used += 1  # charge the attempt even if the repair returns at once
        c, P = _random_start(rng, M)
        x = _project(space, space.clip(space.pack(c, P)), target, counter, mask=mask, max_iter=100)
        if x is not None:
            break
    if x is None:
        return None, counter.used
    x, S = _refine(space, x, target, steps, counter)
    c, P = space.unpack(x)
    g = MultipodalGraphon(c / c.sum(), np.clip(P, 0.0, 1.0))
    return _reduce_and_polish(g, target, counter, S), counter.used


def sample_optimize(p: ConstraintPoint, cfg: SamplerConfig = SamplerConfig(), compare_bipodal=False):
    """Maximize entropy over M-podal graphons with the given edge/triangle densities.

    Deterministic for a fixed ``cfg.seed``: every restart owns an RNG stream
    spawned from the seed, and the best chain is chosen by entropy with
    ties going to the lower chain index.
    """
    if abs(p.tau - p.e**3) > 1e-15:
        symmetric_optimizer(p)  # raises InfeasibleError outside the study region
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    limit = max(1, cfg.budget // cfg.restarts)
    jobs = [(p.e, p.tau, cfg.M, cfg.refine_steps, limit, s) for s in streams]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_chain, jobs))
    else:
        results = [_run_chain(j) for j in jobs]

    evaluations = sum(used for _, used in results)
    best, best_S, stats = None, -math.inf, []
    for k, (res, _) in enumerate(results):
        if res is None:
            stats.append(float("nan"))
            continue
        g, S = res
        e, tau, S = multipodal_densities(g)
        resid = max(abs(e - p.e), abs(tau - p.tau))
        stats.append(S)
        if resid <= cfg.constraint_tol and S > best_S:
            best, best_S = g, S
    if best is None:
        raise NoConvergenceError(
            f"no feasible graphon found within budget at (e, tau)=({p.e}, {p.tau})"
        )

    canon = canonicalize(best, cfg.merge_tol)
    e, tau, S = multipodal_densities(canon)
    resid = max(abs(e - p.e), abs(tau - p.tau))
    if resid > cfg.constraint_tol:
        # merging moved the densities; keep the unmerged optimum
        canon = canonicalize(best, 0.0)
        e, tau, S = multipodal_densities(canon)
        resid = max(abs(e - p.e), abs(tau - p.tau))
    c_est = None
    if canon.m == 2:
        c_est = abs(float(min(canon.sizes)) - 0.5)
    result = SamplerResult(canon, S, canon.m, c_est, resid, evaluations, None, stats)
    if compare_bipodal:
        result.gap_to_bipodal_solver = bipodal_gap(p, S)
    return result


def bipodal_gap(p: ConstraintPoint, entropy: float) -> float | None:
    """``entropy`` minus the best bipodal entropy over c (None if that solve fails)."""
    from .stationarity import best_over_c

    try:
        best, _ = best_over_c(p)
    except BipodalError:
        return None
    return entropy - best.entropy


@dataclass(frozen=True)
class CrossRow:
    e: float
    tau: float
    S2: float
    S4: float
    predicted: float
    solver_offset: float
    sampled_offset: float
    podality: int
    entropy: float
    c: float
    a: float
    b: float
    d: float

    @property
    def t(self) -> float:
        return self.tau - self.e**3


CROSS_COLUMNS = (
    "e", "tau", "t", "S2", "S4", "predicted", "solver_offset", "sampled_offset",
    "podality", "entropy", "c", "a", "b", "d",
)


def _blocks(c, a, b, d):
    """Relabel so that pod 1 is the smaller pod."""
    return (c, a, b, d) if c <= 0.5 else (1.0 - c, b, a, d)


def cross_section(e_grid, *, t=None, tau=None, cfg: SamplerConfig | None = None) -> list[CrossRow]:
    """Predicted and computed ``|c - 1/2|`` along a line of fixed ``t`` or fixed ``tau``.

    ``solver_offset`` comes from the bipodal solver maximized over c.  With a
    sampler config the M-podal sampler also runs at every point and the
    block values ``c, a, b, d`` (pod 1 the smaller) are taken from it;
    otherwise they come from the bipodal solver.  Points where a solve
    fails carry nan.
    """
    from .perturbation import entropy_derivs
    from .stationarity import best_over_c

    if (t is None) == (tau is None):
        raise ValueError("give exactly one of t and tau")
    nan = float("nan")
    rows = []
    for e in np.asarray(e_grid, dtype=float):
        e = float(e)
        p = ConstraintPoint.from_t(e, t) if t is not None else ConstraintPoint(e, tau)
        try:
            rep = entropy_derivs(p)
            s2, s4, pred = rep.S2, rep.S4, rep.c_offset
        except BipodalError as exc:
            log.info("no perturbative data at e=%g: %s", e, exc)
            s2 = s4 = pred = nan
        solver, blocks, entropy, pods, sampled = nan, (nan,) * 4, nan, 0, nan
        try:
            best, _ = best_over_c(p)
            solver = abs(best.c - 0.5)
            blocks = _blocks(best.c, best.a, best.b, best.d)
            entropy, pods = best.entropy, 2
        except BipodalError as exc:
            log.info("bipodal solve failed at e=%g: %s", e, exc)
        if cfg is not None:
            try:
                res = sample_optimize(p, cfg)
            except BipodalError as exc:
                log.info("sampler failed at e=%g: %s", e, exc)
                blocks, entropy, pods = (nan,) * 4, nan, 0
            else:
                entropy, pods = res.entropy, res.podality
                bb = res.bipodal_blocks()
                blocks = bb if bb is not None else (nan,) * 4
                sampled = res.c_estimate if res.c_estimate is not None else nan
        rows.append(CrossRow(e, p.tau, s2, s4, pred, solver, sampled, pods, entropy, *blocks))
    return rows
