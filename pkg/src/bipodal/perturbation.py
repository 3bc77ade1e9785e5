"""Analytic c-derivatives of the constrained curve and of S at c = 1/2.

Along the curve ``e = e0, tau = tau0, f = 0`` parametrized by ``c``, all
derivatives at the symmetric point depend only on the symmetric values
``a0 = a(1/2) = b(1/2)`` and ``d0 = d(1/2)``.  Parity under pod exchange gives
``b' = -a'``, ``b'' = a''``, ``b''' = -a'''``, ``b'''' = a''''`` and
``d' = d''' = 0``, which the formulas below use throughout.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .errors import SingularityError
from .graphon import ConstraintPoint, so, so1, so2, so3, so4, symmetric_optimizer

ER_GUARD = 1e-8
DENOM_GUARD = 1e-12


def _guard(a0, d0):
    if abs(a0 - d0) < ER_GUARD:
        raise SingularityError(f"a0 == d0 ({a0}, {d0}): degenerate on the Erdos-Renyi curve")


def adot_half(a0: float, d0: float) -> tuple[float, float]:
    """First derivative of ``a`` at c = 1/2 and the ratio ``alpha = a' / (a0 - d0)``."""
    _guard(a0, d0)
    ds = so1(a0) - so1(d0)
    den = 2.0 * a0 * ds - so2(a0) * (a0 - d0) ** 2
    if abs(den) < DENOM_GUARD:
        raise SingularityError(f"vanishing denominator for a'(1/2) at a0={a0}, d0={d0}")
    adot = 2.0 * (d0 * d0 - a0 * a0) * ds / den
    return adot, adot / (a0 - d0)


def second_derivs(a0: float, d0: float, adot: float) -> tuple[float, float]:
    """``(a''(1/2), d''(1/2))`` from the second-order edge and triangle conditions."""
    _guard(a0, d0)
    alpha = adot / (a0 - d0)
    addot = -2.0 * a0 * alpha**2 - 4.0 * alpha * (3.0 * a0 - d0) - 8.0 * a0
    dddot = 2.0 * a0 * alpha**2 + 4.0 * alpha * (a0 + d0) + 8.0 * d0
    return addot, dddot


def f_partials_half(a0: float, d0: float) -> dict[str, float]:
    """Partial derivatives of the stationarity residual at ``(a0, a0, 1/2, d0)``."""
    a, d = a0, d0
    s1a, s1d = so1(a), so1(d)
    s2a, s2d = so2(a), so2(d)
    s3a, s4a = so3(a), so4(a)
    ds = s1a - s1d
    fa = -0.5 * s2a * (a - d) ** 2 + a * ds
    fca = s2a * (a * a - d * d) + 2.0 * a * ds
    fcaa = s3a * (a * a - d * d) + 2.0 * d * s2a + 2.0 * ds
    faa = -0.5 * s3a * (a - d) ** 2 + d * s2a + ds
    fad = (a - d) * s2a - a * s2d
    faaa = -0.5 * s4a * (a - d) ** 2 + 1.5 * d * s3a
    faab = 0.5 * s3a * (d - 2.0 * a) + s2a
    return {
        "f_a": fa,
        "f_b": -fa,
        "f_ca": fca,
        "f_cb": fca,
        "f_cd": 2.0 * s2d * (d * d - a * a) + 4.0 * d * (s1d - s1a),
        "f_caa": fcaa,
        "f_cab": 2.0 * s2a * (2.0 * a - d),
        "f_cbb": fcaa,
        "f_aa": faa,
        "f_bb": -faa,
        "f_ad": fad,
        "f_bd": -fad,
        "f_aaa": faaa,
        "f_aab": faab,
        "f_abb": -faab,
        "f_bbb": -faaa,
    }


def third_deriv(a0, d0, adot, addot, dddot2) -> float:
    """``a'''(1/2)`` from the third c-derivative of the stationarity residual."""
    fp = f_partials_half(a0, d0)
    den = fp["f_b"] - fp["f_a"]
    if abs(den) < DENOM_GUARD:
        raise SingularityError(f"f_b - f_a vanishes at a0={a0}, d0={d0}")
    num = (
        3.0 * (fp["f_ca"] + fp["f_cb"]) * addot
        + 3.0 * fp["f_cd"] * dddot2
        + 3.0 * (fp["f_caa"] - 2.0 * fp["f_cab"] + fp["f_cbb"]) * adot**2
        + 3.0 * (fp["f_aa"] - fp["f_bb"]) * adot * addot
        + 3.0 * (fp["f_ad"] - fp["f_bd"]) * adot * dddot2
        + (fp["f_aaa"] - 3.0 * fp["f_aab"] + 3.0 * fp["f_abb"] - fp["f_bbb"]) * adot**3
    )
    return num / den


def fourth_derivs(a0, d0, adot, addot, dddot2, a3) -> tuple[float, float]:
    """``(a''''(1/2), d''''(1/2))`` from the fourth-order edge and triangle conditions."""
    _guard(a0, d0)
    a, d = a0, d0
    ad, add, ddd = adot, addot, dddot2
    rest = (
        8.0 * a * ad * a3
        + 6.0 * a * add**2
        + 12.0 * ad**2 * add
        + 12.0 * d * ddd * add
        + 6.0 * a * ddd**2
        + a3 * (24.0 * a * a + 8.0 * d * d - 32.0 * a * d)
        + 144.0 * a * ad * add
        + 48.0 * ad**3
        + 48.0 * ad * d * ddd
        + 48.0 * (add * (3.0 * a * a - 2.0 * a * d - d * d) + 6.0 * a * ad**2)
        + 192.0 * (a * a - d * d) * ad
    )
    a4 = -rest / (a - d) ** 2
    d4 = -a4 - 16.0 * a3 - 48.0 * (add - ddd)
    return a4, d4


def entropy_second(a0, d0, adot, addot, dddot2) -> float:
    """S''(1/2)."""
    a, d = a0, d0
    return (
        4.0 * (so(a) - so(d))
        + 4.0 * so1(a) * adot
        + 0.5 * (so1(a) * addot + so2(a) * adot**2 + so1(d) * dddot2)
    )


def entropy_fourth(a0, d0, adot, addot, dddot2, a3, a4, d4) -> float:
    """S''''(1/2)."""
    a, d = a0, d0
    s1a, s2a, s3a, s4a = so1(a), so2(a), so3(a), so4(a)
    s1d, s2d = so1(d), so2(d)
    return (
        24.0 * (s1a * addot + s2a * adot**2 - s1d * dddot2)
        + 8.0 * (s1a * a3 + 3.0 * s2a * adot * addot + s3a * adot**3)
        + 0.5 * (s1a * a4 + 4.0 * s2a * adot * a3 + 3.0 * s2a * addot**2
                 + 6.0 * s3a * adot**2 * addot + s4a * adot**4)
        + 0.5 * (s1d * d4 + 3.0 * s2d * dddot2**2)
    )


def predicted_offset(s2: float, s4: float) -> tuple[float, bool]:
    """Predicted ``|c - 1/2|`` of the optimizer and whether it is defined.

    Zero in the symmetric phase (``s2 <= 0``).  When ``s2 > 0`` but ``s4 >= 0``
    the quartic truncation has no interior maximum; the offset is then
    reported as ``nan`` with the flag cleared.
    """
    if s2 <= 0.0:
        return 0.0, True
    if s4 < 0.0:
        return math.sqrt(-6.0 * s2 / s4), True
    return float("nan"), False


@dataclass(frozen=True)
class PerturbationReport:
    e: float
    tau: float
    a0: float
    d0: float
    adot: float
    alpha: float
    addot: float
    dddot2: float
    a3: float
    a4: float
    d4: float
    S2: float
    S4: float
    c_offset: float
    offset_defined: bool

    @property
    def t(self) -> float:
        return self.tau - self.e**3

    def as_row(self) -> dict:
        row = asdict(self)
        row["t"] = self.t
        return row


REPORT_COLUMNS = (
    "e", "tau", "t", "a0", "d0", "adot", "addot", "dddot2",
    "a3", "a4", "d4", "S2", "S4", "c_offset",
)


def perturbation_at(a0: float, d0: float) -> PerturbationReport:
    """Full derivative chain from the symmetric values alone."""
    adot, alpha = adot_half(a0, d0)
    addot, dddot2 = second_derivs(a0, d0, adot)
    a3 = third_deriv(a0, d0, adot, addot, dddot2)
    a4, d4 = fourth_derivs(a0, d0, adot, addot, dddot2, a3)
    s2 = entropy_second(a0, d0, adot, addot, dddot2)
    s4 = entropy_fourth(a0, d0, adot, addot, dddot2, a3, a4, d4)
    offset, defined = predicted_offset(s2, s4)
    e = 0.5 * (a0 + d0)
    tau = e**3 + (a0 - d0) ** 3 / 8.0
    return PerturbationReport(
        e, tau, a0, d0, adot, alpha, addot, dddot2, a3, a4, d4, s2, s4, offset, defined
    )


def entropy_derivs(p: ConstraintPoint) -> PerturbationReport:
    """S''(1/2), S''''(1/2) and the intermediate derivatives at a constraint point."""
    g = symmetric_optimizer(p)
    # report the requested constraint values rather than the round-tripped ones
    return replace(perturbation_at(g.a, g.d), e=p.e, tau=p.tau)


def defining_residuals(a0, d0, adot, addot, dddot2, a3, a4, d4) -> dict[str, float]:
    """Residuals of the four conditions that define the derivative chain.

    ``E2`` and ``T2`` are the second c-derivatives of edge and triangle density
    (scaled by 2 and 4/3), ``E4`` and ``T4`` the fourth.  All vanish for a
    consistent chain.
    """
    a, d = a0, d0
    ad, add, ddd = adot, addot, dddot2
    e2 = add + ddd + 8.0 * ad + 8.0 * (a - d)
    t2 = (a * a + d * d) * add + 2.0 * a * d * ddd + 2.0 * a * ad**2 \
        + 4.0 * (3.0 * a * a + d * d) * ad + 8.0 * a * (a * a - d * d)
    e4 = 0.5 * (a4 + d4) + 8.0 * a3 + 24.0 * (add - ddd)
    t4 = (
        (a * a + d * d) * a4 + 2.0 * a * d * d4 + 8.0 * a * ad * a3 + 6.0 * a * add**2
        + 12.0 * ad**2 * add + 12.0 * d * ddd * add + 6.0 * a * ddd**2
        + 8.0 * (3.0 * a * a * a3 + 18.0 * a * ad * add + 6.0 * ad**3 + a3 * d * d + 6.0 * ad * d * ddd)
        + 48.0 * (3.0 * a * a * add + 6.0 * a * ad**2 - d * d * add - 2.0 * a * d * ddd)
        + 64.0 * (3.0 * a * a * ad - 3.0 * d * d * ad)
    )
    return {"E2": e2, "T2": t2, "E4": e4, "T4": t4}
