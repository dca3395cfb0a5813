"""Double-exponential trapezoidal quadrature of the heat-time integral.

The potential of a tensor basis function is an integral over ``t in (0, inf)``.
After ``t = exp(xi)``, ``xi = alpha (sigma + e^sigma)``,
``sigma = beta (u - e^-u)`` the integrand decays doubly exponentially in ``u``
and the plain trapezoidal rule with step ``tau`` on nodes ``u = s*tau``,
``s = n_lo..n_hi``, is used.

The cubature coefficients are

    a_k = 1/(4 D^{n/2}) int e^{-lambda^2 t/4} prod_j a^j_{k_j}(t) dt
    b_{k,m} = 1/(4 D^{n/2}) int e^{-lambda^2 t/4} prod_j (b^j(P_j) - b^j(Q_j)) dt

where every per-axis factor is a value of ``Phi_M`` at scaled arguments
``x = (k-m)/sqrt(D)``, ``T = t/(h^2 D)``, ``p = (P - h m)/(h sqrt(D))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .kernel import DEFAULT_RADIUS, _phi_finite, phi_full
from .specfun import check_order

__all__ = [
    "QuadratureParams",
    "LambdaSquared",
    "NodeTable",
    "as_lambda2",
    "de_transform",
    "trapezoid_weights",
    "time_weights",
    "axis_factors",
    "a_coeff",
    "b_coeff",
    "TABLES_3D",
    "LITERAL_3D",
    "HIGH_DIM",
]


@dataclass(frozen=True)
class QuadratureParams:
    """Substitution constants, trapezoid step and node index range."""

    alpha: float = 2.0
    beta: float = 2.0
    tau: float = 0.005
    n_lo: int = -450
    n_hi: int = 300

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        if not self.tau > 0:
            raise DomainError("trapezoid step tau must be positive")
        if int(self.n_lo) != self.n_lo or int(self.n_hi) != self.n_hi:
            raise DomainError("node indices must be integers")
        if self.n_lo >= self.n_hi:
            raise DomainError("require n_lo < n_hi")


# Low-dimensional tables.  The lower index reaches t ~ 4e-21; stopping at
# s = -300 (t ~ 4e-11) leaves an O(t_min * f(x)) truncation floor.
TABLES_3D = QuadratureParams(2.0, 2.0, 0.005, -450, 300)
LITERAL_3D = QuadratureParams(2.0, 2.0, 0.005, -300, 300)
HIGH_DIM = QuadratureParams(6.0, 5.0, 0.003, -40, 200)


@dataclass(frozen=True)
class LambdaSquared:
    """Complex parameter ``lambda^2`` of ``-Laplace + lambda^2``."""

    re: float
    im: float = 0.0

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def is_real(self) -> bool:
        return self.im == 0.0

    def check(self, n: int) -> "LambdaSquared":
        """Raise unless the heat-kernel representation converges in dimension ``n``."""
        if not (np.isfinite(self.re) and np.isfinite(self.im)):
            raise DomainError("lambda^2 must be finite")
        if self.re < 0:
            raise DomainError("Re lambda^2 must be nonnegative")
        if n < 3 and self.re <= 0:
            raise DomainError("Re lambda^2 > 0 is required in dimension n < 3")
        return self


def as_lambda2(value) -> LambdaSquared:
    if isinstance(value, LambdaSquared):
        return value
    z = complex(value)
    return LambdaSquared(z.real, z.imag)


def de_transform(u, alpha: float, beta: float):
    """Map ``u`` to ``(t, dt/du)`` under the doubly-exponential substitution.

    Nodes where the composition overflows come back as ``inf``/``nan`` and
    are dropped by :func:`trapezoid_weights`.
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        sigma = u - np.exp(-u)
        e_sig = np.exp(beta * sigma)
        t = np.exp(alpha * beta * sigma + alpha * e_sig)
        dt = t * alpha * beta * (1.0 + np.exp(-u)) * (1.0 + e_sig)
    if t.ndim == 0:
        return float(t), float(dt)
    return t, dt


@dataclass(frozen=True)
class NodeTable:
    """Trapezoid nodes in ``u`` with their images ``t`` and Jacobians ``dt``."""

    tau: float
    u: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    skipped: int

    def __len__(self):
        return len(self.t)


@lru_cache(maxsize=32)
def trapezoid_weights(quad: QuadratureParams) -> NodeTable:
    """Node table for ``s = n_lo..n_hi``; nodes with ``t`` outside ``(0, inf)`` are skipped."""
    s = np.arange(quad.n_lo, quad.n_hi + 1)
    u = s * quad.tau
    t, dt = de_transform(u, quad.alpha, quad.beta)
    ok = np.isfinite(t) & np.isfinite(dt) & (t > 0) & (dt > 0)
    table = NodeTable(quad.tau, u[ok], t[ok], dt[ok], int(np.count_nonzero(~ok)))
    for arr in (table.u, table.t, table.dt):
        arr.setflags(write=False)
    return table


def time_weights(nodes: NodeTable, lambda2: LambdaSquared):
    """Trapezoid weights ``tau * dt * exp(-lambda^2 t / 4) / 4`` per node."""
    lam = lambda2.value
    if lambda2.is_real:
        return nodes.tau * nodes.dt * np.exp(-lam.real * nodes.t / 4.0) / 4.0
    return nodes.tau * nodes.dt * np.exp(-lam * nodes.t / 4.0) / 4.0


def _endpoint(order, X, T, p, full, r):
    out = np.zeros_like(full)
    below = p <= -r
    out[:, below] = full[:, below]
    mid = (p > -r) & (p < r)
    if np.any(mid):
        out[:, mid] = _phi_finite(order, X[None, mid], T[:, None], p[None, mid])
    return out


def axis_factors(order: int, k: int, m, h: float, lo: float, hi: float, d: float,
                 t, r: float = DEFAULT_RADIUS) -> np.ndarray:
    """Per-axis factors ``(b(P) - b(Q)) / sqrt(D)`` on a ``t``-by-``m`` grid.

    Endpoints at scaled distance ``>= r`` from node ``m`` are replaced by
    their limits (``a^j_{k-m}`` or 0).  The ``1/sqrt(D)`` normalisation is
    folded in here so that products over many axes stay ``O(1)``.
    """
    m = np.asarray(m, dtype=float)
    t = np.asarray(t, dtype=float)
    sqd = np.sqrt(d)
    X = (k - m) / sqd
    T = t / (h * h * d)
    full = phi_full(order, X[None, :], T[:, None])
    p = (lo - h * m) / (h * sqd)
    q = (hi - h * m) / (h * sqd)
    return (_endpoint(order, X, T, p, full, r) - _endpoint(order, X, T, q, full, r)) / sqd


def _log_product(factors):
    """Product over axis 0 accumulated as sum of logs with sign tracking."""
    factors = np.asarray(factors, dtype=float)
    sign = np.prod(np.sign(factors), axis=0)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(factors))
    return sign * np.exp(np.sum(logs, axis=0))


def _prepare(k, h, lambda2, n_expected=None):
    k = np.atleast_1d(np.asarray(k))
    if not np.all(np.equal(np.mod(k, 1), 0)):
        raise DomainError("grid indices must be integers")
    n = k.size
    h = np.broadcast_to(np.asarray(h, dtype=float), (n,)) if np.ndim(h) == 0 else np.asarray(h, dtype=float)
    if h.shape != (n,):
        raise DomainError("step vector and index vector differ in dimension")
    if np.any(h <= 0):
        raise DomainError("steps must be positive")
    if n_expected is not None and n != n_expected:
        raise DomainError("dimension mismatch")
    return k, h, as_lambda2(lambda2).check(n)


def a_coeff(k, order: int, h, d: float, lambda2, quad: QuadratureParams) -> complex:
    """Interior convolution coefficient ``a_k^{(M)}``.

    Parameters
    ----------
    k : sequence of int
        Index offset ``k - m``.
    order : int
        Polynomial order ``M``.
    h : float or sequence of float
        Grid steps per axis.
    d : float
        Shape parameter ``D``.
    lambda2 : complex or LambdaSquared
    quad : QuadratureParams

    Returns
    -------
    complex
    """
    order = check_order(order)
    k, h, lam2 = _prepare(k, h, lambda2)
    if d <= 0:
        raise DomainError("shape parameter D must be positive")
    nodes = trapezoid_weights(quad)
    sqd = np.sqrt(d)
    per_axis = [phi_full(order, kj / sqd, nodes.t / (hj * hj * d)) / sqd for kj, hj in zip(k, h)]
    return complex(np.sum(time_weights(nodes, lam2) * _log_product(per_axis)))


def b_coeff(k, m_idx, box, order: int, h, d: float, lambda2, quad: QuadratureParams,
            r: float = DEFAULT_RADIUS) -> complex:
    """Boundary coefficient ``b_{k,m}^{(M)}`` for evaluation node ``k`` and basis node ``m``."""
    order = check_order(order)
    k, h, lam2 = _prepare(k, h, lambda2)
    m_idx = np.atleast_1d(np.asarray(m_idx))
    if m_idx.shape != k.shape or box.dim != k.size:
        raise DomainError("dimension mismatch between k, m and box")
    if d <= 0 or r <= 0:
        raise DomainError("D and r must be positive")
    nodes = trapezoid_weights(quad)
    per_axis = [
        axis_factors(order, int(kj), [mj], hj, lo, hi, d, nodes.t, r)[:, 0]
        for kj, mj, hj, lo, hi in zip(k, m_idx, h, box.lo, box.hi)
    ]
    return complex(np.sum(time_weights(nodes, lam2) * _log_product(per_axis)))
