"""Bipodal and multipodal graphons: densities, entropy and the symmetric optimizer.

The entropy density is ``so(z) = -(z ln z + (1-z) ln(1-z)) / 2`` and the
entropy of a graphon is its integral over the unit square.  Everything here is
a pure function of immutable values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleError

#: Solver-produced block values are kept inside [CLAMP, 1 - CLAMP].
CLAMP = 1e-9
#: Clamping by more than this is reported as a diagnostic.
CLAMP_REPORT = 1e-6
#: Default tolerance for dropping and merging pods.
MERGE_TOL = 1e-4


def _check_open(z, name):
    arr = np.asarray(z, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"{name} requires z in (0, 1), got {z!r}")
    return arr


def _open_scalar(z, name):
    # fast path for plain floats; the solvers call these in tight loops
    if not 0.0 < z < 1.0:
        raise DomainError(f"{name} requires z in (0, 1), got {z!r}")
    return z


_SCALAR = (float, int, np.floating)


def so(z):
    """Entropy density, with the convention 0 ln 0 = 0 at the endpoints."""
    if isinstance(z, _SCALAR):
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"so requires z in [0, 1], got {z!r}")
        zl = z * math.log(z) if z > 0.0 else 0.0
        ql = (1.0 - z) * math.log1p(-z) if z < 1.0 else 0.0
        return -0.5 * (zl + ql)
    arr = np.asarray(z, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"so requires z in [0, 1], got {z!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        zl = np.where(arr > 0.0, arr * np.log(np.where(arr > 0.0, arr, 1.0)), 0.0)
        q = 1.0 - arr
        ql = np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
    out = -0.5 * (zl + ql)
    return float(out) if out.ndim == 0 else out


def so1(z):
    if isinstance(z, _SCALAR):
        z = _open_scalar(z, "so1")
        return -0.5 * (math.log(z) - math.log1p(-z))
    arr = _check_open(z, "so1")
    out = -0.5 * (np.log(arr) - np.log1p(-arr))
    return float(out) if out.ndim == 0 else out


def so2(z):
    if isinstance(z, _SCALAR):
        z = _open_scalar(z, "so2")
        return -0.5 / (z * (1.0 - z))
    arr = _check_open(z, "so2")
    out = -0.5 / (arr * (1.0 - arr))
    return float(out) if out.ndim == 0 else out


def so3(z):
    if isinstance(z, _SCALAR):
        z = _open_scalar(z, "so3")
        return -0.5 * (1.0 / (1.0 - z) ** 2 - 1.0 / z**2)
    arr = _check_open(z, "so3")
    out = -0.5 * (1.0 / (1.0 - arr) ** 2 - 1.0 / arr**2)
    return float(out) if out.ndim == 0 else out


def so4(z):
    if isinstance(z, _SCALAR):
        z = _open_scalar(z, "so4")
        return -(1.0 / z**3 + 1.0 / (1.0 - z) ** 3)
    arr = _check_open(z, "so4")
    out = -(1.0 / arr**3 + 1.0 / (1.0 - arr) ** 3)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstraintPoint:
    """Target edge density ``e`` and triangle density ``tau``."""

    e: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.e < 1.0:
            raise DomainError(f"edge density must lie in (0, 1), got {self.e}")
        if self.tau < 0.0:
            raise DomainError(f"triangle density must be >= 0, got {self.tau}")

    @property
    def t(self) -> float:
        """Distance below the Erdos-Renyi curve, ``tau - e**3``."""
        return self.tau - self.e**3

    @classmethod
    def from_t(cls, e: float, t: float) -> "ConstraintPoint":
        return cls(e, e**3 + t)


@dataclass(frozen=True)
class BipodalGraphon:
    """Two-pod graphon: value ``a`` on the c x c block, ``b`` on the other
    diagonal block and ``d`` off the diagonal."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"c must lie in (0, 1), got {self.c}")

    def exchanged(self) -> "BipodalGraphon":
        """The same reduced graphon with the pods listed in the other order."""
        return BipodalGraphon(self.b, self.a, 1.0 - self.c, self.d)

    def to_multipodal(self) -> "MultipodalGraphon":
        return MultipodalGraphon(
            [self.c, 1.0 - self.c], [[self.a, self.d], [self.d, self.b]]
        )

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True, eq=False)
class MultipodalGraphon:
    """M pods with fractions ``sizes`` and a symmetric edge-probability matrix ``p``."""

    sizes: np.ndarray
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = np.array(self.sizes, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float)
        m = sizes.size
        if m < 1 or p.shape != (m, m):
            raise DomainError(f"p must be {m}x{m}, got shape {p.shape}")
        if np.any(sizes < 0.0) or abs(math.fsum(sizes) - 1.0) > 1e-12:
            raise DomainError("pod sizes must be non-negative and sum to 1")
        if not np.array_equal(p, p.T):
            raise DomainError("p must be symmetric")
        if np.any((p < 0.0) | (p > 1.0)):
            raise DomainError("p entries must lie in [0, 1]")
        sizes.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return self.sizes.size

    def __eq__(self, other):
        if not isinstance(other, MultipodalGraphon):
            return NotImplemented
        return np.array_equal(self.sizes, other.sizes) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.sizes.tobytes(), self.p.tobytes()))

    def to_dict(self) -> dict:
        return {"sizes": self.sizes.tolist(), "p": self.p.tolist()}


def bipodal_densities(g: BipodalGraphon) -> tuple[float, float, float]:
    """Edge density, triangle density and entropy of a bipodal graphon."""
    a, b, c, d = g.a, g.b, g.c, g.d
    q = 1.0 - c
    e = c * c * a + 2.0 * c * q * d + q * q * b
    tau = c**3 * a**3 + 3.0 * c * c * q * a * d * d + 3.0 * c * q * q * b * d * d + q**3 * b**3
    s = c * c * so(a) + q * q * so(b) + 2.0 * c * q * so(d)
    return e, tau, s


def multipodal_densities(g: MultipodalGraphon) -> tuple[float, float, float]:
    """Edge density, triangle density and entropy of a multipodal graphon.

    Sums are compensated (``math.fsum``) so the M**3-term triangle sum stays
    accurate to a few ulps.
    """
    c, p = g.sizes, g.p
    w2 = np.outer(c, c)
    e = math.fsum((w2 * p).ravel())
    w3 = w2[:, :, None] * c[None, None, :]
    tri = p[:, :, None] * p[None, :, :] * p.T[:, None, :]
    tau = math.fsum((w3 * tri).ravel())
    s = math.fsum((w2 * so(p)).ravel())
    return e, tau, s


def symmetric_optimizer(p: ConstraintPoint) -> BipodalGraphon:
    """The symmetric bipodal stationary point with c = 1/2 and a = b.

    With ``w`` the real cube root of ``e**3 - tau`` the diagonal blocks are
    ``e - w`` and the off-diagonal block ``e + w``; below the Erdos-Renyi
    curve ``w > 0`` and ``a < e < d``.
    """
    w = float(np.cbrt(p.e**3 - p.tau))
    a = p.e - w
    d = p.e + w
    if a <= CLAMP or d >= 1.0 - CLAMP or d <= CLAMP or a >= 1.0 - CLAMP:
        raise InfeasibleError(
            f"symmetric optimizer leaves [0,1] at (e, tau)=({p.e}, {p.tau}): a={a}, d={d}"
        )
    return BipodalGraphon(a, a, 0.5, d)


def canonicalize(g: MultipodalGraphon, merge_tol: float = MERGE_TOL) -> MultipodalGraphon:
    """Drop negligible pods, merge pods with matching rows and sort.

    Merged blocks are size-weighted averages, which keeps the edge density
    exact; triangle density and entropy move by O(merge_tol).
    """
    c = np.array(g.sizes, dtype=float)
    p = np.array(g.p, dtype=float)

    keep = c > merge_tol if merge_tol > 0 else c > 0.0
    if not np.any(keep):
        keep = c == c.max()
    c, p = c[keep], p[np.ix_(keep, keep)]
    c = c / math.fsum(c)

    merged = True
    while merged and c.size > 1:
        merged = False
        for i in range(c.size):
            for j in range(i + 1, c.size):
                if np.max(np.abs(p[i] - p[j])) <= merge_tol:
                    c, p = _merge_pods(c, p, i, j)
                    merged = True
                    break
            if merged:
                break

    order = sorted(range(c.size), key=lambda i: (-c[i], tuple(np.sort(p[i]))))
    c = c[order]
    p = p[np.ix_(order, order)]
    p = 0.5 * (p + p.T)
    c = c / math.fsum(c)
    return MultipodalGraphon(c, np.clip(p, 0.0, 1.0))


def _merge_pods(c, p, i, j):
    ci, cj = c[i], c[j]
    tot = ci + cj
    row = (ci * p[i] + cj * p[j]) / tot
    diag = (ci * ci * p[i, i] + 2.0 * ci * cj * p[i, j] + cj * cj * p[j, j]) / (tot * tot)
    p = p.copy()
    p[i, :] = row
    p[:, i] = row
    p[i, i] = diag
    c = c.copy()
    c[i] = tot
    keep = np.arange(c.size) != j
    return c[keep], p[np.ix_(keep, keep)]


def podality(g: MultipodalGraphon, merge_tol: float = MERGE_TOL) -> int:
    return canonicalize(g, merge_tol).m


def graphon_to_json(g) -> str:
    return json.dumps(g.to_dict(), indent=2)


def graphon_from_json(text: str):
    """Inverse of :func:`graphon_to_json` for either graphon type."""
    data = json.loads(text)
    if "sizes" in data:
        return MultipodalGraphon(data["sizes"], data["p"])
    return BipodalGraphon(data["a"], data["b"], data["c"], data["d"])
