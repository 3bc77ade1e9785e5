"""Central finite differences with one Richardson extrapolation step."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# order -> (offsets in units of h, weights, leading error order in h)
STENCILS = {
    1: (np.arange(-2, 3), np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 4),
    2: (np.arange(-2, 3), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 4),
    3: (np.arange(-3, 4), np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8.0, 4),
    4: (np.arange(-3, 4), np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0, 2),
}


class FDEstimate(NamedTuple):
    value: float
    error: float
    h: float
    coarse: float
    fine: float


def richardson_derivative(func, x0: float, h: float, order: int) -> FDEstimate:
    """``order``-th derivative of ``func`` at ``x0`` from stencils at h and h/2.

    ``func`` maps an array of abscissae to an array of values (scalar or
    vector valued along trailing axes).  The error estimate is the size of the
    Richardson correction.
    """
    offsets, weights, err_order = STENCILS[order]
    offs = np.concatenate([offsets * h, offsets * (h / 2.0)])
    vals = np.asarray(func(x0 + offs), dtype=float)
    n = offsets.size
    coarse = np.tensordot(weights, vals[:n], axes=1) / h**order
    fine = np.tensordot(weights, vals[n:], axes=1) / (h / 2.0) ** order
    k = 2.0**err_order - 1.0
    return FDEstimate(fine + (fine - coarse) / k, np.abs(fine - coarse) / k, h, coarse, fine)
