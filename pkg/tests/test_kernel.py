import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volpot.errors import DomainError
from volpot.kernel import _hermite_table, f_arg, p_poly, phi_diff_truncated, phi_full, phi_m, q_poly
from volpot.specfun import erfc, eta_basis

SQRT_PI = math.sqrt(math.pi)


def p_closed(order, t, x):
    s = 1 + t
    p1 = s ** -0.5
    p2 = p1 + 1 / (2 * s ** 1.5) - x * x / s ** 2.5
    p3 = p2 + 3 / (8 * s ** 2.5) - 3 * x * x / (2 * s ** 3.5) + x ** 4 / (2 * s ** 4.5)
    return (p1, p2, p3)[order - 1]


def q_closed(order, t, x, p):
    s = 1 + t
    if order == 1:
        return 0.0
    if order == 2:
        return math.sqrt(t) / s * (x / s + p)
    return -math.sqrt(t) / (4 * s) * (
        2 * x ** 3 / s ** 3 + (2 * p * x * x - 5 * x) / s ** 2 + ((2 * p * p - 5) * x - 3 * p) / s + p * (2 * p * p - 7)
    )


def q_display_sum(order, t, x, y):
    """The double sum over t^(-l/2) terms, as displayed alongside the closed form."""
    total = 0.0
    s = 1 + t
    F = math.sqrt(s / t) * (y - x / s)
    hy = _hermite_table(np.float64(y), 2 * order)
    hyx = _hermite_table(np.float64((y - x) / math.sqrt(t)), 2 * order)
    hx = _hermite_table(np.float64(x / math.sqrt(s)), 2 * order)
    hf = _hermite_table(np.float64(F), 2 * order)
    for k in range(1, order):
        inner = 0.0
        for l in range(1, 2 * k + 1):
            term = hy[2 * k - l] * hyx[l - 1] - math.comb(2 * k, l) * hx[2 * k - l] * hf[l - 1] / s ** (k + 0.5)
            inner += (-1) ** l * term / t ** (l / 2)
        total += (-1) ** k / (math.factorial(k) * 4 ** k) * inner
    return 2 * total


def phi_oracle(order, x, t, p):
    """Defining integral (pi t)^(-1/2) int_p^inf exp(-(x-y)^2/t) eta_2M(y) dy in extended precision."""
    with mpmath.workdps(30):
        x, t, p = mpmath.mpf(x), mpmath.mpf(t), mpmath.mpf(p)
        lag = lambda y: mpmath.laguerre(order - 1, 0.5, y * y)
        g = lambda y: mpmath.exp(-(x - y) ** 2 / t - y * y) * lag(y) / mpmath.sqrt(mpmath.pi)
        pts = sorted({float(p), float(max(p, x / (1 + t))), float(max(p, x / (1 + t))) + 10})
        val = mpmath.quad(g, pts + [mpmath.inf]) / mpmath.sqrt(mpmath.pi * t)
        return float(val)


def test_f_arg_examples():
    assert f_arg(1.0, 0.0, 1.0) == pytest.approx(math.sqrt(2), abs=1e-15)
    t, x, p = 0.5, 0.3, -1.2
    assert f_arg(t, x, p) ** 2 == pytest.approx(p * p + (x - p) ** 2 / t - x * x / (1 + t), abs=1e-14)
    assert f_arg(2.0, 1.5, 0.25) == pytest.approx(math.sqrt(1.5) * (0.25 - 0.5), abs=1e-15)
    with pytest.raises(DomainError):
        f_arg(0.0, 0.1, 0.2)


def test_p_poly_examples():
    assert p_poly(1, 3.0, 0.7) == pytest.approx(0.5, abs=1e-16)
    assert p_poly(2, 0.0, 0.0) == pytest.approx(1.5, abs=1e-15)
    assert abs(p_poly(3, 0.7, 1.1) - p_closed(3, 0.7, 1.1)) <= 1e-13


def test_q_poly_examples():
    assert q_poly(1, 0.4, 0.2, 0.1) == 0.0
    assert abs(q_poly(2, 1.0, 0.4, -0.3) - math.sqrt(1.0) / 2 * (0.4 / 2 - 0.3)) <= 1e-15
    assert abs(q_poly(3, 0.6, 0.2, 0.9) - q_closed(3, 0.6, 0.2, 0.9)) <= 1e-13


@pytest.mark.parametrize("order", [1, 2, 3])
def test_generic_sums_match_closed_forms(order):
    rng = np.random.default_rng(order)
    for _ in range(100):
        t = rng.uniform(0.01, 20)
        x, p = rng.uniform(-3, 3, 2)
        assert abs(p_poly(order, t, x) - p_closed(order, t, x)) <= 1e-13
        assert abs(q_poly(order, t, x, p) - q_closed(order, t, x, p)) <= 1e-13 * max(1.0, abs(q_closed(order, t, x, p)))


@pytest.mark.parametrize("order", [2, 3, 4, 5])
def test_q_poly_matches_display_sum(order):
    # the display sum cancels for small t, so compare where it is well conditioned
    rng = np.random.default_rng(10 + order)
    for _ in range(50):
        t = rng.uniform(0.5, 20)
        x, p = rng.uniform(-2, 2, 2)
        ref = q_display_sum(order, t, x, p)
        assert abs(q_poly(order, t, x, p) - ref) <= 1e-12 * max(1.0, abs(ref))


GRID = list(itertools.product([1, 2, 3], [-2.0, 0.0, 1.5], [0.05, 1.0, 20.0], [-3.0, 0.0, 2.0]))


@pytest.mark.parametrize("order,x,t,p", GRID)
def test_phi_closed_form_matches_defining_integral(order, x, t, p):
    assert abs(phi_m(order, x, t, p) - phi_oracle(order, x, t, p)) <= 1e-11


def test_phi_spec_examples():
    assert abs(phi_m(1, 0.5, 1.0, -0.8) - phi_oracle(1, 0.5, 1.0, -0.8)) <= 1e-12
    assert abs(phi_m(3, 1.2, 0.3, 0.1) - phi_oracle(3, 1.2, 0.3, 0.1)) <= 1e-11
    for order in (1, 2, 3):
        assert phi_m(order, 0.3, 2.0, np.inf) == 0.0
        assert phi_m(order, 0.3, 2.0, -np.inf) == pytest.approx(
            math.exp(-0.09 / 3) * p_poly(order, 2.0, 0.3) / SQRT_PI, abs=1e-16)


def test_phi_domain_errors():
    with pytest.raises(DomainError):
        phi_m(2, 0.1, 0.0, 0.3)
    with pytest.raises(DomainError):
        phi_m(2, np.nan, 1.0, 0.3)
    with pytest.raises(DomainError):
        phi_m(0, 0.1, 1.0, 0.3)


def test_phi_broadcasts():
    x = np.linspace(-1, 1, 5)
    vals = phi_m(2, x[:, None], 0.5, np.array([-np.inf, -0.2, 0.4, np.inf]))
    assert vals.shape == (5, 4)
    for i, j in itertools.product(range(5), range(4)):
        assert vals[i, j] == phi_m(2, x[i], 0.5, [-np.inf, -0.2, 0.4, np.inf][j])


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), st.floats(0.01, 30), st.floats(-5, 5), st.floats(0.0, 3.0))
def test_phi_order1_nonincreasing_in_p(x, t, p, dp):
    assert phi_m(1, x, t, p + dp) <= phi_m(1, x, t, p) + 1e-16


# sup |eta_2M| bounds |Phi_M| because the heat kernel has unit mass.
ETA_SUP = {m: float(np.max(np.abs(eta_basis(m, np.linspace(-6, 6, 24001))))) for m in (1, 2, 3)}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(-5, 5), st.floats(1e-3, 50), st.floats(-6, 6))
def test_phi_bounded(order, x, t, p):
    assert abs(phi_m(order, x, t, p)) <= ETA_SUP[order] * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 20), st.floats(1e-6, 4))
def test_erfc_factor_bounded_by_gaussian(x, t, p):
    # valid where F >= 0; for F < 0 it can fail (x=0.75, t=0.25, p=0.5)
    F = f_arg(t, x, p)
    if F >= 0:
        assert math.exp(-x * x / (1 + t)) * erfc(F) <= math.exp(-p * p) * (1 + 1e-12)


def test_erfc_factor_bound_needs_positive_f():
    x, t, p = 0.75, 0.25, 0.5
    assert f_arg(t, x, p) < 0
    assert math.exp(-x * x / (1 + t)) * erfc(f_arg(t, x, p)) > math.exp(-p * p)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(-5, 5), st.floats(1e-3, 50), st.floats(0.5, 7))
def test_phi_tail_bounded_by_basis_tail(order, x, t, p):
    # |Phi_M(x,t,p)| <= sup_{y >= p} |eta(y)|: justifies dropping far endpoints
    y = np.linspace(p, p + 10, 4001)
    tail = float(np.max(np.abs(eta_basis(order, y))))
    assert abs(phi_m(order, x, t, p)) <= tail * (1 + 1e-9) + 1e-300


def test_truncated_difference_branches():
    assert phi_diff_truncated(2, 0.3, 1.0, -10.0, 10.0) == pytest.approx(
        math.exp(-0.09 / 2) * p_poly(2, 1.0, 0.3) / SQRT_PI, rel=1e-15)
    assert phi_diff_truncated(2, 0.3, 1.0, 7.0, 9.0) == 0.0
    assert phi_diff_truncated(2, 0.3, 1.0, -9.0, -7.0) == 0.0


@pytest.mark.parametrize("order", [1, 2, 3])
def test_truncated_difference_close_to_exact(order):
    ends = [-9.0, -6.5, -6.0, -3.0, 0.0, 2.0, 5.9, 6.0, 7.0, 12.0]
    for x in (-1.0, 0.0, 0.8):
        for t in (0.05, 1.0, 10.0):
            for p, q in itertools.combinations(ends, 2):
                exact = phi_m(order, x, t, p) - phi_m(order, x, t, q)
                assert abs(phi_diff_truncated(order, x, t, p, q, 6.0) - exact) <= 3e-16


def test_truncated_difference_errors():
    with pytest.raises(DomainError):
        phi_diff_truncated(2, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        phi_diff_truncated(2, 0.0, 1.0, 0.0, 1.0, r=0.0)


def test_full_limit_is_total_mass():
    # integral of Phi_M(., t, -inf) over x equals sqrt(pi t) * ... reduces to mass 1 of eta
    x = np.linspace(-40, 40, 40001)
    for order in (1, 2, 3):
        total = np.trapezoid(phi_full(order, x, 3.0), x) if hasattr(np, "trapezoid") else np.trapz(phi_full(order, x, 3.0), x)
        assert total == pytest.approx(1.0, abs=1e-10)
