"""Independent reference values for the cubature.

For a profile ``u`` with ``u(+-1) = u'(+-1) = 0`` the zero extension of
``prod_j u(x_j)`` is ``C^1`` and solves ``(-Laplace + lambda^2) U = f`` with
``f = (-Laplace + lambda^2) prod_j u(x_j)`` restricted to the cube, so the
potential of ``f`` over ``[-1, 1]^n`` is exactly ``prod_j u(x_j)``.

The brute-force integrator works directly with the closed-form kernels in
dimension 1 and 3 and does not share code with the cubature.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import AccuracyNotMetError, DomainError

__all__ = [
    "ProfileFunction",
    "PROFILES",
    "get_profile",
    "exact_potential_product",
    "kernel_closed_form",
    "brute_force_potential",
]

_PI = np.pi


@dataclass(frozen=True)
class ProfileFunction:
    """Univariate profile with its second derivative.

    ``vanishing_order`` is the number of derivatives (starting with the value)
    that vanish at ``+-1``.
    """

    name: str
    u: Callable
    upp: Callable
    vanishing_order: int

    def __call__(self, x):
        return self.u(x)

    def derivative(self, x, step: float = 1e-20):
        """First derivative by the complex-step method (profiles are analytic)."""
        return np.imag(self.u(np.asarray(x, dtype=float) + 1j * step)) / step

    def check_vanishing(self, tol: float = 1e-12) -> None:
        ends = np.array([-1.0, 1.0])
        if np.max(np.abs(self.u(ends))) > tol or np.max(np.abs(self.derivative(ends))) > tol:
            raise DomainError(f"profile {self.name!r} does not vanish with its derivative at +-1")


PROFILES = {
    p.name: p
    for p in (
        ProfileFunction(
            "cos2",
            lambda x: np.cos(_PI * x / 2) ** 2,
            lambda x: -(_PI ** 2 / 2) * np.cos(_PI * x),
            2,
        ),
        ProfileFunction(
            "x2m1_cubed",
            lambda x: (x * x - 1) ** 3,
            lambda x: 6 * (x * x - 1) * (5 * x * x - 1),
            3,
        ),
        ProfileFunction(
            "one_minus_x2_sq",
            lambda x: (1 - x * x) ** 2,
            lambda x: 12 * x * x - 4,
            2,
        ),
        ProfileFunction(
            "one_minus_sin",
            lambda x: 1 - np.sin(_PI * x * x / 2),
            lambda x: -_PI * np.cos(_PI * x * x / 2) + (_PI * x) ** 2 * np.sin(_PI * x * x / 2),
            2,
        ),
        ProfileFunction(
            "exp_bump",
            lambda x: np.exp(x) * (1 - x * x) ** 2,
            lambda x: np.exp(x) * ((1 - x * x) ** 2 - 8 * x * (1 - x * x) + 12 * x * x - 4),
            2,
        ),
    )
}


def get_profile(name) -> ProfileFunction:
    if isinstance(name, ProfileFunction):
        return name
    try:
        return PROFILES[name]
    except KeyError:
        raise DomainError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def exact_potential_product(profile, lambda2, x) -> complex:
    """Exact ``K_lambda f(x)`` over ``[-1,1]^n`` for ``f = (-Laplace + lambda^2) prod u``.

    The value does not depend on ``lambda2``; it is accepted so the call
    mirrors the cubature and fails on the same invalid parameters.
    """
    profile = get_profile(profile)
    profile.check_vanishing()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1):
        raise DomainError("evaluation point must lie in [-1, 1]^n")
    if complex(lambda2).real < 0:
        raise DomainError("Re lambda^2 must be nonnegative")
    vals = profile.u(x)
    return complex(np.prod(vals))


def kernel_closed_form(n: int, lam, radius):
    """Fundamental solution of ``-Laplace + lambda^2`` for ``n`` in {1, 3}.

    ``lam`` is ``lambda`` itself (principal root of ``lambda^2``).
    """
    lam = complex(lam)
    radius = np.asarray(radius, dtype=float)
    if np.any(radius <= 0):
        raise DomainError("radius must be positive")
    if n == 3:
        out = np.exp(-lam * radius) / (4 * _PI * radius)
    elif n == 1:
        if lam.real <= 0:
            raise DomainError("the 1-D kernel requires Re lambda > 0")
        out = np.exp(-lam * radius) / (2 * lam)
    else:
        raise DomainError(f"closed-form kernel available only for n in (1, 3), got {n}")
    if lam.imag == 0:
        out = out.real
    return out if np.ndim(out) else out.item()


def _lam(lambda2) -> complex:
    return cmath.sqrt(complex(lambda2))


def _brute_1d(f, lo, hi, lam, x, tol):
    def piece(a, b):
        if b <= a:
            return 0.0
        def g(y, part):
            v = complex(np.exp(-lam * abs(x - y)) / (2 * lam) * f(np.array([y]))[0])
            return v.real if part == 0 else v.imag
        re, e1 = integrate.quad(g, a, b, args=(0,), epsabs=tol / 10, epsrel=1e-12, limit=400)
        im, e2 = integrate.quad(g, a, b, args=(1,), epsabs=tol / 10, epsrel=1e-12, limit=400)
        return complex(re, im), e1 + e2

    total, err = 0.0, 0.0
    for a, b in ((lo, x), (x, hi)):
        if b > a:
            v, e = piece(a, b)
            total += v
            err += e
    if err > tol:
        raise AccuracyNotMetError("1-D reference quadrature did not converge", total, err)
    return total


def _pyramid_rule(f, lo, hi, lam, x, npts):
    """Integrate over the box as six pyramids with apex ``x``.

    On the pyramid over a face, ``y = x + s (z - x)`` with ``z`` on the face
    and ``s in (0, 1)``; then ``dy = s^2 dist dA ds`` and the kernel's
    ``1/|y - x|`` singularity cancels against ``s^2``.
    """
    g, w = np.polynomial.legendre.leggauss(npts)
    s = 0.5 * (g + 1)
    ws = 0.5 * w
    total = 0.0 + 0.0j
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for face in (lo[axis], hi[axis]):
            dist = abs(face - x[axis])
            if dist == 0:
                continue
            a0, a1 = others
            za = 0.5 * (hi[a0] - lo[a0]) * (g + 1) + lo[a0]
            zb = 0.5 * (hi[a1] - lo[a1]) * (g + 1) + lo[a1]
            wa = 0.5 * (hi[a0] - lo[a0]) * w
            wb = 0.5 * (hi[a1] - lo[a1]) * w
            ZA, ZB = np.meshgrid(za, zb, indexing="ij")
            WA = np.outer(wa, wb)
            z = np.empty(ZA.shape + (3,))
            z[..., axis] = face
            z[..., a0] = ZA
            z[..., a1] = ZB
            R = np.linalg.norm(z - x, axis=-1)
            # points along the rays: shape (npts, npts, ns, 3)
            y = x + s[None, None, :, None] * (z - x)[:, :, None, :]
            fy = np.asarray(f(y.reshape(-1, 3))).reshape(y.shape[:-1])
            radial = np.sum(ws * s * np.exp(-lam * s[None, None, :] * R[..., None]) * fy, axis=-1)
            total += np.sum(WA * dist / (4 * _PI * R) * radial)
    return total


def brute_force_potential(f, box, lambda2, x, tol: float = 1e-8, max_points: int = 96):
    """Reference value of ``int_box kappa_lambda(x - y) f(y) dy`` for ``n`` in {1, 3}.

    Parameters
    ----------
    f : callable
        Density; receives an array of points of shape ``(N, n)`` and returns ``N`` values.
    box : Box
    lambda2 : complex
        ``Re lambda^2 > 0`` is required for ``n = 1``.
    x : sequence of float
        Evaluation point inside the box.
    tol : float
        Absolute accuracy target.
    max_points : int
        Largest Gauss rule per direction tried in 3-D.

    Raises
    ------
    AccuracyNotMetError
        If successive refinements do not agree within ``tol``.
    """
    lo = np.asarray(box.lo, dtype=float)
    hi = np.asarray(box.hi, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    if lo.size != n:
        raise DomainError("dimension mismatch between box and point")
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError("evaluation point must lie in the box")
    lam = _lam(lambda2)
    if n == 1:
        if complex(lambda2).real <= 0:
            raise DomainError("Re lambda^2 > 0 is required in dimension 1")
        return complex(_brute_1d(lambda y: np.asarray(f(y.reshape(-1, 1))), lo[0], hi[0], lam, x[0], tol))
    if n != 3:
        raise DomainError(f"brute-force reference available only for n in (1, 3), got {n}")
    if complex(lambda2).real < 0:
        raise DomainError("Re lambda^2 must be nonnegative")
    prev = _pyramid_rule(f, lo, hi, lam, x, 16)
    npts = 16
    while npts < max_points:
        npts = min(int(npts * 1.5), max_points)
        cur = _pyramid_rule(f, lo, hi, lam, x, npts)
        if abs(cur - prev) <= tol:
            return complex(cur)
        prev = cur
    raise AccuracyNotMetError("3-D reference quadrature did not converge", complex(prev), None)
