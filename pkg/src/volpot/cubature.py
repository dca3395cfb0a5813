"""Tensor-product cubature of volume potentials over boxes.

At a grid node ``h k`` the cubature

    K_h f(hk) = sum_{m in interior} f(hm) a_{k-m} + sum_{m in collar} f~(hm) b_{k,m}

is evaluated without ever forming an ``n``-dimensional grid: for a separated
density ``f = sum_p r_p prod_j f_j^(p)`` and each heat-time node ``t_s`` the
sum over nodes factorises into one-dimensional discrete convolutions

    c_j^(p)(t_s) = D^{-1/2} sum_{m_j} beta_j(k_j, m_j, t_s) f_j^(p)(h_j m_j),

so the cost is linear in the dimension.  Axes that share step, box edges,
evaluation index and factor are convolved once and enter the product with a
multiplicity, which keeps ``n = 10^5`` cheap.  The collar contribution is
the full-range product minus the interior-range product.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .extension import HestenesScheme, _call, hestenes_extend
from .kernel import DEFAULT_RADIUS
from .quadrature import (
    LambdaSquared,
    QuadratureParams,
    TABLES_3D,
    as_lambda2,
    axis_factors,
    time_weights,
    trapezoid_weights,
)
from .specfun import check_order, eta_basis

__all__ = [
    "Box",
    "Grid",
    "AxisNodes",
    "GridPartition",
    "axis_nodes",
    "partition",
    "SeparatedDensity",
    "SharedFactorDensity",
    "test_density",
    "grid_index",
    "quasi_interpolant",
    "evaluate_potential",
    "potential_parts",
    "interior_convolution",
    "ConvergenceRow",
    "convergence_table",
]

# Relative slack when mapping box edges to node indices, so that nodes lying
# exactly at distance r*h*sqrt(D) are classified consistently.
_INDEX_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``prod_j [lo_j, hi_j]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise DomainError("box bounds must be 1-D sequences of equal, nonzero length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))) or np.any(lo >= hi):
            raise DomainError("box requires finite lo_j < hi_j on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "Box":
        return cls(np.full(n, lo), np.full(n, hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True, eq=False)
class Grid:
    """Grid steps (scalar or per axis), shape parameter ``D`` and support radius ``r``."""

    h: float | Sequence[float]
    d: float = 4.0
    r: float = DEFAULT_RADIUS

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim > 1 or np.any(~(h > 0)):
            raise DomainError("grid steps must be positive")
        if not self.d > 0:
            raise DomainError("shape parameter D must be positive")
        if not self.r > 0:
            raise DomainError("support radius r must be positive")

    def steps(self, n: int) -> np.ndarray:
        h = np.asarray(self.h, dtype=float)
        if h.ndim == 0:
            return np.full(n, float(h))
        if h.size != n:
            raise DomainError(f"grid has {h.size} steps but the problem has dimension {n}")
        return h


@dataclass(frozen=True)
class AxisNodes:
    """Node indices ``m`` of one axis of the extended region and the interior mask."""

    m: np.ndarray
    interior: np.ndarray

    @property
    def collar(self) -> np.ndarray:
        return ~self.interior


@lru_cache(maxsize=4096)
def axis_nodes(h: float, lo: float, hi: float, d: float, r: float) -> AxisNodes:
    """Classify the nodes ``h m`` of one axis.

    Extended region: ``lo - r h sqrt(D) <= h m <= hi + r h sqrt(D)`` (closed).
    Interior: ``lo + r h sqrt(D) < h m < hi - r h sqrt(D)`` (open).
    """
    w = r * math.sqrt(d)
    first = math.ceil(lo / h - w - _INDEX_EPS)
    last = math.floor(hi / h + w + _INDEX_EPS)
    m = np.arange(first, last + 1)
    interior = (m > lo / h + w + _INDEX_EPS) & (m < hi / h - w - _INDEX_EPS)
    m.setflags(write=False)
    interior.setflags(write=False)
    return AxisNodes(m, interior)


@dataclass(frozen=True)
class GridPartition:
    """Per-axis node classification; the n-dimensional sets are Cartesian products."""

    axes: tuple

    @property
    def n_extended(self) -> int:
        return math.prod(a.m.size for a in self.axes)

    @property
    def n_interior(self) -> int:
        return math.prod(int(np.count_nonzero(a.interior)) for a in self.axes)

    @property
    def n_collar(self) -> int:
        return self.n_extended - self.n_interior


def partition(box: Box, grid: Grid) -> GridPartition:
    h = grid.steps(box.dim)
    return GridPartition(tuple(
        axis_nodes(float(hj), float(lo), float(hi), float(grid.d), float(grid.r))
        for hj, lo, hi in zip(h, box.lo, box.hi)
    ))


class SeparatedDensity:
    """Density ``f(x) = sum_p w_p prod_j f_j^(p)(x_j)``.

    ``factors[p][j]`` are vectorised univariate callables.  Factors that are
    the same object are convolved only once per axis.
    """

    shared = False

    def __init__(self, weights, factors):
        self.weights = np.asarray(weights)
        self._factors = [list(row) for row in factors]
        if self.weights.ndim != 1 or self.weights.size != len(self._factors):
            raise DomainError("need one weight per rank term")
        dims = {len(row) for row in self._factors}
        if len(dims) != 1 or 0 in dims:
            raise DomainError("every rank term needs the same nonzero number of factors")

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return len(self._factors[0])

    def factor(self, p: int, j: int) -> Callable:
        return self._factors[p][j]

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        total = 0.0
        for p in range(self.rank):
            term = self.weights[p]
            for j in range(self.dim):
                term = term * _call(self.factor(p, j), x[..., j].ravel()).reshape(x.shape[:-1])
            total = total + term
        return total

    def __add__(self, other: "SeparatedDensity") -> "SeparatedDensity":
        if other.dim != self.dim:
            raise DomainError("cannot add densities of different dimension")
        rows = [[a.factor(p, j) for j in range(a.dim)] for a in (self, other) for p in range(a.rank)]
        return SeparatedDensity(np.concatenate([self.weights, other.weights]), rows)

    def scaled(self, c) -> "SeparatedDensity":
        return SeparatedDensity(c * self.weights, self._factors)


class SharedFactorDensity(SeparatedDensity):
    """Rank-``n`` density whose term ``p`` is ``base`` with axis ``p`` replaced.

    ``f(x) = sum_p w_p distinguished_p(x_p) prod_{j != p} base_j(x_j)``.
    """

    shared = True

    def __init__(self, base, distinguished, weights=None):
        self.base = list(base)
        self.distinguished = list(distinguished)
        if len(self.base) != len(self.distinguished) or not self.base:
            raise DomainError("base and distinguished factor lists must have equal nonzero length")
        n = len(self.base)
        self.weights = np.ones(n) if weights is None else np.asarray(weights)
        if self.weights.shape != (n,):
            raise DomainError("need one weight per axis")

    @property
    def rank(self) -> int:
        return len(self.base)

    @property
    def dim(self) -> int:
        return len(self.base)

    def factor(self, p: int, j: int) -> Callable:
        return self.distinguished[p] if j == p else self.base[j]

    @property
    def _factors(self):
        return [[self.factor(p, j) for j in range(self.dim)] for p in range(self.rank)]

    def scaled(self, c) -> "SharedFactorDensity":
        return SharedFactorDensity(self.base, self.distinguished, c * self.weights)


def test_density(profile, lambda2, n: int) -> SharedFactorDensity:
    """``f = (-Laplace + lambda^2) prod_j u(x_j)`` as a shared-factor density.

    Term ``p`` uses ``-u'' + (lambda^2/n) u`` on axis ``p`` and ``u`` elsewhere.
    """
    from .oracle import get_profile

    prof = get_profile(profile)
    lam = as_lambda2(lambda2).value
    share = lam / n if lam.imag else lam.real / n
    u, upp = prof.u, prof.upp

    def g(x):
        return -upp(x) + share * u(x)

    return SharedFactorDensity([u] * n, [g] * n)


test_density.__test__ = False  # not a pytest test


def grid_index(point, h) -> np.ndarray:
    """Integer indices ``k`` with ``h k == point``; raises if the point is off-grid."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), point.shape)
    k = np.rint(point / h)
    if np.any(np.abs(k * h - point) > 1e-9 * np.maximum(1.0, np.abs(point))):
        raise DomainError("evaluation point is not a grid node for the given steps")
    return k.astype(np.int64)


class _Plan:
    """Caches per-axis factor matrices and one-dimensional convolutions."""

    def __init__(self, box, grid, order, lambda2, quad, extension, k):
        self.order = check_order(order)
        self.n = box.dim
        self.box = box
        self.grid = grid
        self.extension = extension
        self.lam2 = as_lambda2(lambda2).check(self.n)
        self.nodes = trapezoid_weights(quad)
        self.weights = time_weights(self.nodes, self.lam2)
        k = np.atleast_1d(np.asarray(k))
        if k.shape != (self.n,):
            raise DomainError(f"index vector has shape {k.shape}, expected ({self.n},)")
        if not np.all(np.equal(np.mod(k, 1), 0)):
            raise DomainError("grid indices must be integers")
        self.h = grid.steps(self.n)
        cols = (k.astype(float), self.h, box.lo, box.hi)
        self.axis_id, first, _ = _row_groups(*cols)
        self.axis_sig = np.column_stack([c[first] for c in cols])
        self._mats = {}
        self._sums = {}

    def _matrix(self, a):
        if a not in self._mats:
            kj, h, lo, hi = self.axis_sig[a]
            nodes = axis_nodes(float(h), float(lo), float(hi), float(self.grid.d), float(self.grid.r))
            B = axis_factors(self.order, int(kj), nodes.m, h, lo, hi, self.grid.d, self.nodes.t, self.grid.r)
            self._mats[a] = (B, nodes, h, lo, hi)
        return self._mats[a]

    def sums(self, a, f):
        """``(extended, interior)`` one-dimensional convolutions of factor ``f`` on axis class ``a``."""
        key = (a, id(f))
        if key not in self._sums:
            B, nodes, h, lo, hi = self._matrix(a)
            xs = h * nodes.m
            if self.extension is None:
                vals = _call(f, xs)
            else:
                vals = hestenes_extend(f, lo, hi, self.extension, xs)
            full = B @ vals
            inner = B[:, nodes.interior] @ vals[nodes.interior]
            self._sums[key] = (full, inner, f)  # keep f alive so id() stays unique
        full, inner, _ = self._sums[key]
        return full, inner


def _row_groups(*cols):
    """Group equal rows of the given columns.

    Returns ``(group id per row, first row of each group, group sizes)``;
    built from successive 1-D sorts, which is much faster than a row-wise
    ``np.unique`` for millions of axes.
    """
    ids = np.zeros(len(cols[0]), dtype=np.int64)
    for col in cols:
        _, inv = np.unique(col, return_inverse=True)
        ids = ids * (int(inv.max()) + 1) + inv.ravel()
        _, ids = np.unique(ids, return_inverse=True)
        ids = ids.ravel()
    _, first, counts = np.unique(ids, return_index=True, return_counts=True)
    return ids, first, counts


def _sum_rows(mult, rows):
    """``sum_g mult_g rows_g`` with compensated summation when there are many groups."""
    if rows.shape[0] <= 64:
        return mult @ rows
    scaled = mult[:, None] * rows
    return np.array([math.fsum(col) for col in scaled.T])


def _log_parts(c):
    absc = np.abs(c)
    zero = absc == 0
    logc = np.log(np.where(zero, 1.0, absc))
    if np.iscomplexobj(c):
        phase = np.where(zero, 0.0, np.angle(c))
    else:
        phase = (c < 0).astype(float)  # count of sign flips
    return logc, zero, phase


def _phase(total, complex_mode):
    if complex_mode:
        return np.exp(1j * total)
    return 1.0 - 2.0 * (np.rint(total).astype(np.int64) % 2)


def _shared_combine(c, d, mult, wsum):
    """``sum_g wsum_g d_g c_g^(mult_g - 1) prod_{g' != g} c_g'^mult_g'`` per time node.

    Evaluated as ``(prod c) * sum_g wsum_g d_g / c_g`` in the log domain; a
    group whose convolution vanishes falls back to the product over the
    remaining groups.
    """
    complex_mode = np.iscomplexobj(c)
    logc, zero, phase = _log_parts(c)
    mult = mult.astype(float)
    total_log = _sum_rows(mult, logc)
    total_phase = _sum_rows(mult, phase)
    zcount = _sum_rows(mult, zero.astype(float))
    out = np.zeros(c.shape[1], dtype=np.result_type(c, d, wsum, float))
    with np.errstate(over="ignore", under="ignore"):
        for g in range(c.shape[0]):
            regular = zcount == 0
            lone_zero = (zcount == 1) & zero[g] & (mult[g] == 1)
            log_g = np.where(regular, total_log - logc[g], total_log)
            ph = np.where(regular, total_phase - phase[g], total_phase)
            val = np.exp(log_g) * _phase(ph, complex_mode)
            val = np.where(regular | lone_zero, val, 0.0)
            out = out + wsum[g] * d[g] * val
    return out


def _group_product(c, mult):
    """``prod_g c_g^mult_g`` per time node, in the log domain."""
    complex_mode = np.iscomplexobj(c)
    logc, zero, phase = _log_parts(c)
    mult = mult.astype(float)
    with np.errstate(over="ignore", under="ignore"):
        val = np.exp(_sum_rows(mult, logc)) * _phase(_sum_rows(mult, phase), complex_mode)
    return np.where(np.any(zero, axis=0), 0.0, val)


def _integrands(plan: _Plan, density: SeparatedDensity, use_shared: bool = True):
    """Per-time-node integrands over the extended and the interior node sets."""
    if density.dim != plan.n:
        raise DomainError(f"density has dimension {density.dim}, box has {plan.n}")
    if density.shared and use_shared:
        base_ids = np.array([id(f) for f in density.base], dtype=np.int64)
        dist_ids = np.array([id(f) for f in density.distinguished], dtype=np.int64)
        inverse, first, mult = _row_groups(plan.axis_id, base_ids, dist_ids)
        wsum = np.zeros(len(first), dtype=np.result_type(density.weights, float))
        np.add.at(wsum, inverse, density.weights)
        c_full, c_in, d_full, d_in = [], [], [], []
        for j in first:
            a = plan.axis_id[j]
            cf, ci = plan.sums(a, density.base[j])
            df, di = plan.sums(a, density.distinguished[j])
            c_full.append(cf)
            c_in.append(ci)
            d_full.append(df)
            d_in.append(di)
        full = _shared_combine(np.array(c_full), np.array(d_full), mult, wsum)
        inner = _shared_combine(np.array(c_in), np.array(d_in), mult, wsum)
        return full, inner

    full = 0.0
    inner = 0.0
    for p in range(density.rank):
        row = [density.factor(p, j) for j in range(plan.n)]
        _, first, mult = _row_groups(plan.axis_id, np.array([id(f) for f in row], dtype=np.int64))
        sums = [plan.sums(plan.axis_id[j], row[j]) for j in first]
        full = full + density.weights[p] * _group_product(np.array([s[0] for s in sums]), mult)
        inner = inner + density.weights[p] * _group_product(np.array([s[1] for s in sums]), mult)
    return full, inner


def potential_parts(density: SeparatedDensity, box: Box, grid: Grid, order: int, lambda2,
                    quad: QuadratureParams = TABLES_3D, extension: HestenesScheme | None = None,
                    k=None, use_shared: bool = True):
    """Interior-convolution and collar contributions of the cubature at node ``h k``.

    Returns
    -------
    (complex, complex)
        ``(sum over interior nodes of f a_{k-m}, sum over collar nodes of f~ b_{k,m})``.
    """
    plan = _Plan(box, grid, order, lambda2, quad, extension, k)
    full, inner = _integrands(plan, density, use_shared)
    w = plan.weights
    interior = complex(np.sum(w * inner))
    collar = complex(np.sum(w * (full - inner)))
    return interior, collar


def evaluate_potential(density: SeparatedDensity, box: Box, grid: Grid, order: int, lambda2,
                       quad: QuadratureParams = TABLES_3D, extension: HestenesScheme | None = None,
                       k=None) -> complex:
    """Cubature approximation of ``int_box kappa_lambda(hk - y) f(y) dy``.

    Parameters
    ----------
    density : SeparatedDensity
        Separated density; factors are sampled outside the box through
        ``extension`` or, if it is ``None``, through their own formula.
    box : Box
    grid : Grid
    order : int
        ``M``; the cubature has order ``2M``.
    lambda2 : complex or LambdaSquared
    quad : QuadratureParams
    extension : HestenesScheme, optional
    k : sequence of int
        Grid index of the evaluation point.

    Returns
    -------
    complex
    """
    interior, collar = potential_parts(density, box, grid, order, lambda2, quad, extension, k)
    return interior + collar


def interior_convolution(density: SeparatedDensity, box: Box, grid: Grid, order: int, lambda2,
                         quad: QuadratureParams = TABLES_3D, k=None, use_shared: bool = True) -> complex:
    """Only the interior part ``sum_{m in interior} f(hm) a_{k-m}``."""
    plan = _Plan(box, grid, order, lambda2, quad, None, k)
    _, inner = _integrands(plan, density, use_shared)
    return complex(np.sum(plan.weights * inner))


def quasi_interpolant(f, grid: Grid, order: int, x, box: Box,
                      extension: HestenesScheme | None = None):
    """``D^{-n/2} sum_{m} f~(hm) prod_j eta_{2M}((x_j - h_j m_j)/(h_j sqrt(D)))``.

    Sums over the nodes within ``r h sqrt(D)`` of the box.  ``f`` is either a
    :class:`SeparatedDensity` or, for ``n <= 3``, a callable on points of
    shape ``(N, n)`` (then no extension is applied).
    """
    order = check_order(order)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = box.dim
    if x.size != n:
        raise DomainError("point and box differ in dimension")
    h = grid.steps(n)
    sqd = math.sqrt(grid.d)
    axes = partition(box, grid).axes
    basis = [eta_basis(order, (x[j] - h[j] * axes[j].m) / (h[j] * sqd)) / sqd for j in range(n)]
    if isinstance(f, SeparatedDensity):
        total = 0.0
        for p in range(f.rank):
            term = f.weights[p]
            for j in range(n):
                fj = f.factor(p, j)
                xs = h[j] * axes[j].m
                if extension is None:
                    vals = _call(fj, xs)
                else:
                    vals = hestenes_extend(fj, box.lo[j], box.hi[j], extension, xs)
                term = term * (basis[j] @ vals)
            total = total + term
        return total
    if n > 3:
        raise DomainError("non-separated densities are supported only for n <= 3")
    mesh = np.meshgrid(*[h[j] * axes[j].m for j in range(n)], indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    vals = np.asarray(f(pts)).reshape(mesh[0].shape)
    for j in reversed(range(n)):
        vals = vals @ basis[j]
    return vals.item() if np.ndim(vals) == 0 else vals


@dataclass(frozen=True)
class ConvergenceRow:
    """One row of an error table; ``rate`` is ``None`` on the first row or when undefined."""

    h_inv: float
    error: float
    rate: float | None
    seconds: float = 0.0
    value: complex = field(default=0j, compare=False)

    @property
    def h(self) -> float:
        return 1.0 / self.h_inv


def convergence_table(evaluate: Callable[[float], complex], reference, h_inv_list) -> list:
    """Absolute errors and observed orders for a sequence of grid refinements.

    ``evaluate(h_inv)`` returns the approximation for step ``1/h_inv``;
    ``reference`` is the exact value.  The rate attached to a row compares
    it with the previous (coarser) row: ``log(e_prev/e_cur) / log(h_prev/h_cur)``.
    """
    rows = []
    prev = None
    for h_inv in h_inv_list:
        start = time.perf_counter()
        value = complex(evaluate(h_inv))
        seconds = time.perf_counter() - start
        err = abs(value - complex(reference))
        rate = None
        if prev is not None and prev.error > 0 and err > 0:
            rate = math.log(prev.error / err) / math.log(h_inv / prev.h_inv)
        row = ConvergenceRow(float(h_inv), err, rate, seconds, value)
        rows.append(row)
        prev = row
    return rows
