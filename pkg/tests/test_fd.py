import numpy as np
import pytest

from bipodal.fd import STENCILS, richardson_derivative


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_stencils_exact_on_polynomials(order):
    offsets, weights, _ = STENCILS[order]
    # the stencil annihilates lower powers and reproduces k! on x**k
    for k in range(order + 2):
        val = weights @ offsets.astype(float) ** k
        expected = float(np.prod(np.arange(1, order + 1))) if k == order else 0.0
        assert val == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("order, exact", [(1, 1.0), (2, -0.0), (3, -1.0), (4, 0.0)])
def test_richardson_on_sine(order, exact):
    est = richardson_derivative(np.sin, 0.0, 0.1, order)
    assert est.value == pytest.approx(exact, abs=1e-7)


def test_error_estimate_shrinks_under_refinement():
    errs = [richardson_derivative(np.exp, 0.3, h, 2).error for h in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_vector_valued():
    f = lambda x: np.stack([np.sin(x), np.cos(x)], axis=-1)
    est = richardson_derivative(f, 0.4, 0.05, 1)
    np.testing.assert_allclose(est.value, [np.cos(0.4), -np.sin(0.4)], rtol=1e-10)
