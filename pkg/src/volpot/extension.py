"""Hestenes reflection extension of univariate functions beyond an interval.

Outside ``[lo, hi]`` the extension is a weighted sum of reflected samples,
e.g. for ``x > hi``

    f~(x) = sum_s c_s f(hi - a_s (x - hi)),

with weights solving ``sum_s c_s (-a_s)^k = 1`` for ``k = 0..N``.  This makes
the extension ``C^N`` across the endpoints and exact on polynomials of
degree ``<= N``.

The weights grow quickly with ``N`` (about 3e7 for ``a_s = 2^-s`` at
``N = 6``), so rounding in the reflected samples is amplified by
``sum |c_s|``.  The system is therefore solved exactly in rational
arithmetic, and reflected arguments and the weighted sum are formed in
``np.longdouble``, which on x86 platforms has 11 extra bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .errors import DomainError, OutOfReachError, SingularSystemError

__all__ = ["OUT_OF_REACH_MODES", "HestenesScheme", "hestenes_solve", "hestenes_extend", "named_scheme", "SCHEMES"]

RESIDUAL_TOL = 1e-9


def _solve_exact(rates):
    """Gaussian elimination with partial pivoting over the rationals."""
    n = len(rates)
    A = [[Fraction(-a) ** k for a in rates] + [Fraction(1)] for k in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col]))
        if A[piv][col] == 0:
            raise SingularSystemError("reflection system is singular")
        A[col], A[piv] = A[piv], A[col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            if f:
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    c = [Fraction(0)] * n
    for r in reversed(range(n)):
        c[r] = (A[r][n] - sum(A[r][j] * c[j] for j in range(r + 1, n))) / A[r][r]
    return c


def _to_longdouble(values):
    with localcontext() as ctx:
        ctx.prec = 40
        return np.array([np.longdouble(str(Decimal(v.numerator) / Decimal(v.denominator))) for v in values])


def hestenes_solve(rates, exact: bool = False):
    """Weights ``c`` with ``sum_s c_s (-a_s)^k = 1`` for ``k = 0..len(rates)-1``.

    Returns float64 weights, or the exact ``Fraction`` weights of the
    (binary) rates when ``exact`` is true.

    Raises
    ------
    SingularSystemError
        For repeated rates, or if the float64 weights miss an equation by
        more than ``RESIDUAL_TOL``.
    """
    a = np.asarray(rates, dtype=float).ravel()
    if a.size == 0:
        raise DomainError("at least one reflection rate is required")
    if np.any(~(a > 0)) or not np.all(np.isfinite(a)):
        raise DomainError("reflection rates must be positive and finite")
    if np.unique(a).size != a.size:
        raise SingularSystemError("reflection rates must be pairwise distinct")
    exact_c = _solve_exact([float(v) for v in a])
    c = np.array([float(v) for v in exact_c])
    V = np.vander(-a, increasing=True).T  # V[k, s] = (-a_s)^k
    residual = np.max(np.abs(V @ c - 1.0))
    if residual > RESIDUAL_TOL:
        raise SingularSystemError(f"reflection system too ill-conditioned (residual {residual:.2e})")
    return exact_c if exact else c


OUT_OF_REACH_MODES = ("raise", "formula")


@dataclass(frozen=True)
class HestenesScheme:
    """Reflection rates ``a_s`` and weights ``c_s``; ``order`` is ``N``.

    ``out_of_reach`` decides what happens when a reflected argument leaves
    the interval: ``"raise"`` (default) or ``"formula"``, which evaluates
    ``f`` there directly.  The latter only makes sense when ``f`` is given
    by a formula valid beyond the interval.
    """

    rates: tuple
    coeffs: tuple
    out_of_reach: str = "raise"
    exact: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.out_of_reach not in OUT_OF_REACH_MODES:
            raise DomainError(f"out_of_reach must be one of {OUT_OF_REACH_MODES}")
        if len(self.rates) != len(self.coeffs) or not self.rates:
            raise DomainError("need one weight per reflection rate")

    @classmethod
    def from_rates(cls, rates, out_of_reach: str = "raise") -> "HestenesScheme":
        exact = hestenes_solve(rates, exact=True)
        return cls(tuple(float(v) for v in rates), tuple(float(v) for v in exact), out_of_reach, tuple(exact))

    def extended_coeffs(self) -> np.ndarray:
        """Weights in ``np.longdouble`` (exactly rounded when known)."""
        if self.exact is not None:
            return _to_longdouble(self.exact)
        return np.asarray(self.coeffs, dtype=np.longdouble)

    @property
    def order(self) -> int:
        return len(self.rates) - 1

    def residuals(self) -> np.ndarray:
        a = np.asarray(self.rates)
        c = np.asarray(self.coeffs)
        return np.array([np.sum(c * (-a) ** k) - 1.0 for k in range(len(a))])


SCHEMES = {
    "ext1": lambda s: 2.0 ** -s,
    "ext2": lambda s: 1.0 / s,
    "ext3": lambda s: float(s),
}


def named_scheme(name: str, order: int, out_of_reach: str = "raise") -> HestenesScheme | None:
    """Scheme ``ext1`` (``a_s = 2^-s``), ``ext2`` (``1/s``), ``ext3`` (``s``); ``none`` gives ``None``."""
    if name in (None, "none"):
        return None
    try:
        rate = SCHEMES[name]
    except KeyError:
        raise DomainError(f"unknown extension scheme {name!r}") from None
    if order < 0:
        raise DomainError("extension order must be nonnegative")
    return HestenesScheme.from_rates([rate(s) for s in range(1, order + 2)], out_of_reach)


def hestenes_extend(f, lo: float, hi: float, scheme: HestenesScheme, x):
    """Evaluate the extension of ``f`` from ``[lo, hi]`` at ``x``.

    ``f`` is called with numpy arrays of points inside ``[lo, hi]`` only,
    unless the scheme's ``out_of_reach`` mode is ``"formula"``.

    Raises
    ------
    OutOfReachError
        If a reflected argument leaves ``[lo, hi]`` and the mode is ``"raise"``.
    """
    if not lo < hi:
        raise DomainError("require lo < hi")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    flat = x.ravel()
    a = np.asarray(scheme.rates, dtype=np.longdouble)
    c = scheme.extended_coeffs()
    out = np.zeros(flat.shape, dtype=complex)
    is_complex = False
    inside = (flat >= lo) & (flat <= hi)
    if np.any(inside):
        vals = _call(f, flat[inside])
        is_complex = np.iscomplexobj(vals)
        out[inside] = vals
    slack = 1e-12 * (hi - lo)
    for side, edge in ((flat < lo, lo), (flat > hi, hi)):
        if not np.any(side):
            continue
        e = np.longdouble(edge)
        refl = e - a[:, None] * (flat[side][None, :].astype(np.longdouble) - e)
        outside = np.any(refl < lo - slack) or np.any(refl > hi + slack)
        if outside and scheme.out_of_reach == "raise":
            worst = flat[side][np.argmax(np.abs(flat[side] - edge))]
            raise OutOfReachError(
                f"reflection of x={worst:.6g} leaves [{lo:.6g}, {hi:.6g}]; "
                "use smaller rates or a narrower collar"
            )
        if not outside:
            refl = np.clip(refl, np.longdouble(lo), np.longdouble(hi))
        vals = _call(f, refl.ravel()).reshape(refl.shape)
        is_complex = is_complex or np.iscomplexobj(vals)
        out[side] = c @ vals
    if not is_complex:
        out = out.real
    out = out.reshape(x.shape)
    return out if out.ndim else out.item()


def _call(f, xs):
    """Evaluate ``f`` on an array, falling back to a Python loop for scalar-only callables."""
    try:
        vals = np.asarray(f(xs))
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.asarray([f(v) for v in xs])
