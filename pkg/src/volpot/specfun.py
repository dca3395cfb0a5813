"""Scalar special functions used by the cubature kernels.

All functions accept scalars or numpy arrays and broadcast elementwise.
Orthogonal polynomials are evaluated by upward three-term recurrence; the
degrees needed here are small (at most ``2M - 1``) so the recurrence is
stable and cheaper than expanding coefficient tables.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

from .errors import DomainError

__all__ = ["erfc", "hermite", "laguerre", "eta_basis", "check_order"]

_INV_SQRT_PI = 1.0 / np.sqrt(np.pi)


def check_order(order) -> int:
    """Validate a polynomial order ``M`` (approximation order ``2M``)."""
    if isinstance(order, (bool, np.bool_)) or int(order) != order or order < 1:
        raise DomainError(f"polynomial order must be a positive integer, got {order!r}")
    return int(order)


def erfc(x):
    """Complementary error function for real, finite arguments.

    Parameters
    ----------
    x : float or ndarray
        Real argument(s).

    Returns
    -------
    float or ndarray
        ``erfc(x)`` in ``(0, 2)``; underflows to 0 for ``x > 26.5``.

    Raises
    ------
    DomainError
        If any argument is NaN or infinite.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("erfc requires finite arguments")
    out = _sp.erfc(x)
    return out if out.ndim else float(out)


def hermite(k: int, x):
    """Physicists' Hermite polynomial ``H_k(x)``.

    Uses ``H_{j+1} = 2x H_j - 2j H_{j-1}`` with ``H_0 = 1``, ``H_1 = 2x``.
    """
    if k < 0 or int(k) != k:
        raise DomainError(f"Hermite degree must be a nonnegative integer, got {k!r}")
    x = np.asarray(x)
    h_prev = np.ones_like(x, dtype=np.result_type(x, float))
    if k == 0:
        return h_prev if x.ndim else float(h_prev)
    h = 2.0 * x
    for j in range(1, int(k)):
        h, h_prev = 2.0 * x * h - 2.0 * j * h_prev, h
    return h if x.ndim else h.item()


def laguerre(k: int, gamma: float, x):
    """Generalized Laguerre polynomial ``L_k^{(gamma)}(x)``.

    Recurrence
    ``(j+1) L_{j+1} = (2j + 1 + gamma - x) L_j - (j + gamma) L_{j-1}``
    started from ``L_0 = 1`` and ``L_1 = 1 + gamma - x``.
    """
    if gamma <= -1:
        raise DomainError(f"Laguerre parameter must exceed -1, got {gamma!r}")
    if k < 0 or int(k) != k:
        raise DomainError(f"Laguerre degree must be a nonnegative integer, got {k!r}")
    x = np.asarray(x)
    l_prev = np.ones_like(x, dtype=np.result_type(x, float))
    if k == 0:
        return l_prev if x.ndim else float(l_prev)
    lk = 1.0 + gamma - x
    for j in range(1, int(k)):
        lk, l_prev = ((2 * j + 1 + gamma - x) * lk - (j + gamma) * l_prev) / (j + 1), lk
    return lk if x.ndim else lk.item()


def eta_basis(order: int, x):
    """Univariate generating function of approximation order ``2*order``.

    ``pi**-0.5 * L_{order-1}^{(1/2)}(x**2) * exp(-x**2)``; its moments satisfy
    ``int x**j eta(x) dx = delta_{j0}`` for ``0 <= j < 2*order``.
    """
    order = check_order(order)
    x = np.asarray(x, dtype=float)
    val = _INV_SQRT_PI * laguerre(order - 1, 0.5, x * x) * np.exp(-x * x)
    return val if np.ndim(val) else float(val)
