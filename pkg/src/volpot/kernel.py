"""One-dimensional kernel factors of the heat-kernel representation.

For the truncated generating function ``eta_{2M}`` restricted to ``(p, inf)``
the scaled heat flow

    Phi_M(x, t, p) = (pi t)^(-1/2) * int_p^inf exp(-(x - y)^2 / t) eta_{2M}(y) dy

has the closed form

    Phi_M = exp(-x^2/(1+t)) / (2 sqrt(pi))
            * (erfc(F) P_M(t, x) - exp(-F^2) Q_M(t, x, p) / sqrt(pi))

with ``F = sqrt((1+t)/t) * (p - x/(1+t))``.  The potential of a box-truncated
tensor basis function is a one-dimensional ``t``-integral of products of
differences ``Phi_M(., ., p_j) - Phi_M(., ., q_j)``.
"""

from __future__ import annotations

from math import comb, factorial

import numpy as np

from .errors import DomainError
from .specfun import check_order, erfc

__all__ = [
    "f_arg",
    "p_poly",
    "q_poly",
    "phi_m",
    "phi_full",
    "phi_diff_truncated",
    "DEFAULT_RADIUS",
]

# exp(-36) ~ 2.3e-16: far-field simplifications are exact to double precision.
DEFAULT_RADIUS = 6.0

_SQRT_PI = np.sqrt(np.pi)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("heat-time variable t must be positive")
    return t


def _scalar(v):
    return v if np.ndim(v) else v.item()


def f_arg(t, x, y):
    """``F(t, x, y) = sqrt((1+t)/t) * (y - x/(1+t))``."""
    t = _check_t(t)
    return _scalar(np.sqrt((1.0 + t) / t) * (np.asarray(y) - np.asarray(x) / (1.0 + t)))


def _hermite_table(z, kmax):
    """``[H_0(z), ..., H_kmax(z)]`` by recurrence."""
    out = [np.ones_like(z)]
    if kmax >= 1:
        out.append(2.0 * z)
    for j in range(1, kmax):
        out.append(2.0 * z * out[j] - 2.0 * j * out[j - 1])
    return out


def p_poly(order: int, t, x):
    """``P_M(t, x) = sum_{k<M} (1+t)^(-k-1/2) L_k^{(-1/2)}(x^2/(1+t))``."""
    order = check_order(order)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    s = 1.0 + t
    z = x * x / s
    # Laguerre recurrence with gamma = -1/2, accumulated on the fly.
    scale = s ** -0.5
    l_prev = np.ones_like(z)
    total = scale * l_prev
    if order > 1:
        lk = 0.5 - z
        scale = scale / s
        total = total + scale * lk
        for k in range(1, order - 1):
            lk, l_prev = ((2 * k + 0.5 - z) * lk - (k - 0.5) * l_prev) / (k + 1), lk
            scale = scale / s
            total = total + scale * lk
    return _scalar(total)


def q_poly(order: int, t, x, y):
    """Polynomial ``Q_M(t, x, y)`` multiplying ``exp(-F^2)`` in ``Phi_M``.

    Writing ``eta_2M = sum_k c_k H_2k(y) exp(-y^2) / sqrt(pi)`` with
    ``c_k = (-1/4)^k / k!``, the product of the heat kernel and the Gaussian
    is a Gaussian in ``y`` with mean ``mu = x/(1+t)`` and variance parameter
    ``nu = t/(1+t)``.  Expanding ``H_2k`` about ``mu`` and integrating over
    ``(y, inf)`` leaves truncated Gaussian moments whose ``exp(-F^2)`` parts
    obey

        beta_0 = 0,  beta_1 = 1,  beta_i = (i-1) nu/2 beta_{i-2} + (y - mu)^(i-1),

    so that

        Q_M = -sqrt(nu/(1+t)) sum_k c_k sum_i C(2k, i) 2^i H_{2k-i}(mu) beta_i.

    Every term carries a nonnegative power of ``t``, unlike the equivalent
    sum over ``t^(-l/2)`` terms, which cancels badly for small ``t``.
    """
    order = check_order(order)
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(t, x, y).shape
    if order == 1:
        return _scalar(np.zeros(shape))
    kmax = 2 * order - 2
    s = 1.0 + t
    mu = x / s
    nu = t / s
    w = y - mu
    beta = [np.zeros(shape), np.ones(shape)]
    wpow = np.ones(shape)
    for i in range(2, kmax + 1):
        wpow = wpow * w
        beta.append((i - 1) * nu / 2.0 * beta[i - 2] + wpow)
    hmu = _hermite_table(mu, kmax)
    total = np.zeros(shape)
    for k in range(1, order):
        inner = np.zeros(shape)
        for i in range(1, 2 * k + 1):
            inner = inner + comb(2 * k, i) * 2.0 ** i * hmu[2 * k - i] * beta[i]
        total = total + (-0.25) ** k / factorial(k) * inner
    return _scalar(-np.sqrt(nu / s) * total)


def phi_full(order: int, x, t):
    """Limit ``Phi_M(x, t, -inf) = pi^(-1/2) exp(-x^2/(1+t)) P_M(t, x)``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return _scalar(np.exp(-x * x / (1.0 + t)) * p_poly(order, t, x) / _SQRT_PI)


def _phi_finite(order, x, t, p):
    s = 1.0 + t
    F = np.sqrt(s / t) * (p - x / s)
    head = np.exp(-x * x / s) * erfc(F) * p_poly(order, t, x) / (2.0 * _SQRT_PI)
    if order == 1:
        return head
    # exp(-x^2/(1+t) - F^2) rewritten to avoid forming F^2 from a cancelled F.
    gauss = np.exp(-p * p - (x - p) ** 2 / t)
    return head - gauss * q_poly(order, t, x, p) / (2.0 * np.pi)


def phi_m(order: int, x, t, p):
    """Closed form of ``Phi_M(x, t, p)``; ``p`` may be ``+inf`` or ``-inf``.

    Parameters
    ----------
    order : int
        Polynomial order ``M``.
    x : float or ndarray
        Scaled evaluation coordinate.
    t : float or ndarray
        Positive heat-time variable.
    p : float or ndarray
        Lower endpoint of the truncated generating function.

    Returns
    -------
    float or ndarray
    """
    order = check_order(order)
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(np.isnan(x)) or np.any(np.isinf(x)):
        raise DomainError("x must be finite")
    x, t, p = np.broadcast_arrays(x, t, p)
    out = np.zeros(x.shape)
    lo = p == -np.inf
    fin = np.isfinite(p)
    if np.any(lo):
        out[lo] = phi_full(order, x[lo], t[lo])
    if np.any(fin):
        out[fin] = _phi_finite(order, x[fin], t[fin], p[fin])
    return _scalar(out)


def phi_diff_truncated(order: int, x, t, p, q, r: float = DEFAULT_RADIUS):
    """``Phi_M(x,t,p) - Phi_M(x,t,q)`` with far-field shortcuts.

    Endpoints beyond ``+-r`` are replaced by their limits, which changes the
    value by ``O(exp(-r^2))``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p >= q):
        raise DomainError("require p < q")
    if r <= 0:
        raise DomainError("truncation radius must be positive")
    x, t, p, q = np.broadcast_arrays(np.asarray(x, dtype=float), _check_t(t), p, q)
    out = np.empty(x.shape)
    both_out = ((p >= r) & (q >= r)) | ((p <= -r) & (q <= -r))
    spanning = (p <= -r) & (q >= r)
    wide = (q - p >= 2 * r) & ~both_out & ~spanning
    left = wide & (np.abs(p) < r)
    right = wide & (np.abs(q) < r) & ~left
    rest = ~(both_out | spanning | left | right)
    out[both_out] = 0.0
    if np.any(spanning):
        out[spanning] = phi_full(order, x[spanning], t[spanning])
    if np.any(left):
        out[left] = phi_m(order, x[left], t[left], p[left])
    if np.any(right):
        out[right] = phi_full(order, x[right], t[right]) - phi_m(order, x[right], t[right], q[right])
    if np.any(rest):
        out[rest] = phi_m(order, x[rest], t[rest], p[rest]) - phi_m(order, x[rest], t[rest], q[rest])
    return _scalar(out)
