import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from volpot.cubature import Box
from volpot.errors import DomainError
from volpot.quadrature import (
    HIGH_DIM,
    LITERAL_3D,
    TABLES_3D,
    LambdaSquared,
    QuadratureParams,
    a_coeff,
    as_lambda2,
    b_coeff,
    de_transform,
    time_weights,
    trapezoid_weights,
)
from volpot.specfun import eta_basis


def test_params_validation():
    for bad in [(0, 2, 0.005, -3, 3), (2, -1, 0.005, -3, 3), (2, 2, 0.0, -3, 3), (2, 2, 0.005, 3, 3), (2, 2, 0.005, -2.5, 3)]:
        with pytest.raises(DomainError):
            QuadratureParams(*bad)


def test_lambda_squared_rules():
    assert LambdaSquared(0.0).check(3).is_real
    assert as_lambda2(1 + 1j) == LambdaSquared(1.0, 1.0)
    with pytest.raises(DomainError):
        LambdaSquared(-0.1).check(3)
    with pytest.raises(DomainError):
        LambdaSquared(0.0, 1.0).check(2)
    with pytest.raises(DomainError):
        LambdaSquared(np.inf).check(3)


def test_de_transform_value():
    with mpmath.workdps(30):
        ref = float(mpmath.exp(-4 + 2 * mpmath.exp(-2)))
    t, _ = de_transform(0.0, 2.0, 2.0)
    assert t == pytest.approx(ref, rel=1e-15)
    assert t == pytest.approx(0.0240089, abs=5e-8)


def test_de_transform_derivative():
    u, eps = 0.5, 1e-5
    _, dt = de_transform(u, 2.0, 2.0)
    fd = (de_transform(u + eps, 2.0, 2.0)[0] - de_transform(u - eps, 2.0, 2.0)[0]) / (2 * eps)
    assert fd == pytest.approx(dt, rel=1e-8)


def test_de_transform_extremes_do_not_raise():
    t, _ = de_transform(-5.0, 6.0, 5.0)
    assert t < 1e-300
    t, dt = de_transform(np.array([3.0]), 6.0, 5.0)
    assert not np.isfinite(t[0])


@pytest.mark.parametrize("quad", [TABLES_3D, LITERAL_3D, HIGH_DIM])
def test_node_table(quad):
    nodes = trapezoid_weights(quad)
    assert len(nodes) == quad.n_hi - quad.n_lo + 1 - nodes.skipped
    assert np.all(np.isfinite(nodes.t)) and nodes.t.min() > 0
    assert np.all(np.diff(nodes.t) > 0)


def test_high_dim_table_drops_overflow():
    nodes = trapezoid_weights(QuadratureParams(6.0, 5.0, 0.003, -40, 2000))
    assert nodes.skipped > 0
    assert np.all(np.isfinite(nodes.dt))


def test_time_weights_complex_only_when_needed():
    nodes = trapezoid_weights(TABLES_3D)
    assert not np.iscomplexobj(time_weights(nodes, LambdaSquared(1.0)))
    assert np.iscomplexobj(time_weights(nodes, LambdaSquared(1.0, 1.0)))


def test_a_coeff_sign_symmetry():
    a = a_coeff([3, -2, 1], 2, 0.1, 4.0, 1.0, LITERAL_3D)
    b = a_coeff([3, 2, 1], 2, 0.1, 4.0, 1.0, LITERAL_3D)
    c = a_coeff([-3, 2, -1], 2, 0.1, 4.0, 1 + 1j, LITERAL_3D)
    d = a_coeff([3, 2, 1], 2, 0.1, 4.0, 1 + 1j, LITERAL_3D)
    assert abs(a - b) <= 1e-16 * abs(a)
    assert abs(c - d) <= 1e-16 * abs(c)


def test_a_coeff_real_lambda_gives_real_value():
    assert a_coeff([0, 1, 2], 3, 0.1, 4.0, 1.0, LITERAL_3D).imag == 0.0


def _refined(quad, factor):
    return QuadratureParams(quad.alpha, quad.beta, quad.tau / factor, quad.n_lo * factor, quad.n_hi * factor)


@pytest.mark.parametrize("order", [1, 3])
def test_a_coeff_trapezoid_refinement(order):
    base = a_coeff([0, 0, 0], order, 0.1, 4.0, 1.0, TABLES_3D)
    for factor in (2, 10):
        fine = a_coeff([0, 0, 0], order, 0.1, 4.0, 1.0, _refined(TABLES_3D, factor))
        assert abs(fine - base) <= 1e-12 * abs(base)


def test_short_node_range_has_truncation_floor():
    # stopping at s = -300 cuts the integral at t ~ 4e-11; refinement then
    # moves the value by ~1e-11 relative, which is why the default reaches -450
    base = a_coeff([0, 0, 0], 1, 0.1, 4.0, 1.0, LITERAL_3D)
    fine = a_coeff([0, 0, 0], 1, 0.1, 4.0, 1.0, _refined(LITERAL_3D, 2))
    assert 1e-13 < abs(fine - base) / abs(base) < 1e-10


def test_a_coeff_lambda_zero_continuity():
    a0 = a_coeff([0, 0, 0], 2, 0.1, 4.0, 0.0, TABLES_3D)
    a1 = a_coeff([0, 0, 0], 2, 0.1, 4.0, 1e-12, TABLES_3D)
    assert np.isfinite(a0)
    assert abs(a0 - a1) <= 1e-6 * abs(a0)


def test_a_coeff_decays_along_axis():
    vals = [a_coeff([k], 1, 0.1, 4.0, 1.0, TABLES_3D).real for k in range(3, 30)]
    assert np.all(np.diff(vals) < 0)


def test_a_coeff_matches_one_dimensional_oracle():
    # n = 1: a_k = D^{-1/2} int kappa(h k - y) eta((y)/(h sqrt D)) dy over R
    h, d = 0.5, 4.0
    for order in (1, 2, 3):
        for k in (0, 1, 4):
            def g(y):
                return math.exp(-abs(h * k - y)) / 2 * eta_basis(order, y / (h * math.sqrt(d))) / math.sqrt(d)
            ref = sum(integrate.quad(g, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                      for a, b in ((-30, h * k), (h * k, 30)))
            assert abs(a_coeff([k], order, h, d, 1.0, TABLES_3D) - ref) <= 1e-10


def test_b_coeff_deep_interior_equals_a_coeff():
    box = Box.cube(3, -3.0, 3.0)
    k, m = np.array([0, 0, 0]), np.array([1, 0, -1])
    b = b_coeff(k, m, box, 3, 0.1, 4.0, 1.0, LITERAL_3D)
    a = a_coeff(k - m, 3, 0.1, 4.0, 1.0, LITERAL_3D)
    assert abs(b - a) <= 3e-16


def test_b_coeff_far_node_vanishes():
    box = Box.cube(3)
    assert b_coeff([0, 0, 0], [25, 0, 0], box, 2, 0.1, 4.0, 1.0, LITERAL_3D) == 0


@pytest.mark.parametrize("m", [-12, -10, -9, -3])
def test_b_coeff_boundary_node_matches_quadrature(m):
    # n = 1, box [-1, 1], h = 0.1: basis function cut by the box edge
    h, d, k = 0.1, 4.0, -8
    def g(y):
        return math.exp(-abs(h * k - y)) / 2 * eta_basis(1, (y - h * m) / (h * math.sqrt(d))) / math.sqrt(d)
    ref = sum(integrate.quad(g, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
              for a, b in ((-1.0, h * k), (h * k, 1.0)))
    val = b_coeff([k], [m], Box.cube(1), 1, h, d, 1.0, TABLES_3D)
    assert abs(val - ref) <= 1e-9


def test_coefficient_argument_errors():
    with pytest.raises(DomainError):
        a_coeff([0.5, 0, 0], 1, 0.1, 4.0, 1.0, TABLES_3D)
    with pytest.raises(DomainError):
        a_coeff([0], 1, 0.1, 4.0, 0.0, TABLES_3D)  # n = 1 needs Re lambda^2 > 0
    with pytest.raises(DomainError):
        a_coeff([0, 0], 1, [0.1, 0.1, 0.1], 4.0, 1.0, TABLES_3D)
    with pytest.raises(DomainError):
        b_coeff([0, 0], [0, 0], Box.cube(3), 1, 0.1, 4.0, 1.0, TABLES_3D)
