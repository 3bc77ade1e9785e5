"""Discriminant form of S''(1/2) and its expansion about the triple point.

With ``A, B, C`` as below, ``alpha = -B / 2A`` and
``S''(1/2) = A alpha**2 + B alpha + C = -(B**2 - 4AC) / 4A``, so off the
Erdos-Renyi curve the transition is the zero set of ``B**2 - 4AC``.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError
from .graphon import so, so1, so2

ER_GUARD = 1e-8


def abc(a: float, d: float) -> tuple[float, float, float]:
    ds = so1(a) - so1(d)
    A = 0.5 * so2(a) * (a - d) ** 2 - a * ds
    B = -2.0 * (a + d) * ds
    # grouped as differences so that a == d gives exact zeros
    C = 4.0 * ((so(a) - so(d)) - (a * so1(a) - d * so1(d)))
    return A, B, C


def discriminant(a: float, d: float) -> float:
    A, B, C = abc(a, d)
    return B * B - 4.0 * A * C


def _nondegenerate(a, d):
    if abs(a - d) < ER_GUARD:
        raise SingularityError(f"A vanishes at a == d ({a}, {d})")


def alpha_from_abc(a: float, d: float) -> float:
    _nondegenerate(a, d)
    A, B, _ = abc(a, d)
    return -B / (2.0 * A)


def s2_from_abc(a: float, d: float) -> float:
    """S''(1/2) as ``-(B**2 - 4AC) / 4A``."""
    _nondegenerate(a, d)
    A, B, C = abc(a, d)
    return -(B * B - 4.0 * A * C) / (4.0 * A)


def series_terms(da: float, dd: float) -> dict[str, float]:
    """Homogeneous terms ``A_m, B_m, C_m`` (m = 1..4) in ``da = a - 1/2``,
    ``dd = d - 1/2``, and the leading discriminant term ``delta5``.

    ``delta5_sum`` is the same fifth-order term assembled from the products
    of lower terms, kept as an internal cross-check.
    """
    x, y = da, dd
    A = {
        1: x - y,
        2: x * x - y * y,
        3: 4.0 / 3.0 * (x**3 - y**3),
        4: 4.0 / 3.0 * (-(x**4) + 6.0 * x**3 * y - 3.0 * x * x * y * y - 2.0 * x * y**3),
    }
    B = {
        1: 4.0 * (x - y),
        2: 4.0 * (x * x - y * y),
        3: 16.0 / 3.0 * (x**3 - y**3),
        4: 16.0 / 3.0 * (x**4 + x**3 * y - x * y**3 - y**4),
    }
    C = {
        1: 4.0 * (x - y),
        2: 4.0 * (x * x - y * y),
        3: 16.0 / 3.0 * (x**3 - y**3),
        4: 8.0 * (x**4 - y**4),
    }
    out = {}
    for m in range(1, 5):
        out[f"A{m}"] = A[m]
        out[f"B{m}"] = B[m]
        out[f"C{m}"] = C[m]
    out["delta5"] = 32.0 / 3.0 * (x - y) ** 4 * (3.0 * x + y)
    out["delta5_sum"] = (
        2.0 * B[1] * B[4] + 2.0 * B[2] * B[3]
        - 4.0 * (A[1] * C[4] + A[2] * C[3] + A[3] * C[2] + A[4] * C[1])
    )
    return out


def cubic_boundary(e):
    """Leading-order transition curve ``tau = e**3 - 8 (e - 1/2)**3`` for e > 1/2."""
    arr = np.asarray(e, dtype=float)
    if np.any(arr <= 0.5):
        raise DomainError("the cubic boundary applies only for e > 1/2")
    out = arr**3 - 8.0 * (arr - 0.5) ** 3
    return float(out) if out.ndim == 0 else out
