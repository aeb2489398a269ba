"""Registry of the built-in test problems.

Every problem carries its flux/diffusion callbacks with derivative bounds
over the invariant interval, initial data whose range defines the bounds,
and (where available) the exact solution used for error tables.  Problem
ids are the vocabulary of the command-line interface.
"""

from __future__ import annotations

import numpy as np

from .limiters import Bounds
from .schemes1d import Problem1D
from .schemes2d import Problem2D

TWO_PI = 2.0 * np.pi


def barenblatt(x, t, m_exp: int):
    """Self-similar compactly supported solution of u_t = (u^m)_xx.

    ``t^{-k} max(0, 1 - k(m-1) x^2 / (2 m t^{2k}))^{1/(m-1)}`` with
    ``k = 1/(m+1)``; nonnegative, and identically zero outside a ball
    whose radius grows like ``t^k``.
    """
    if np.any(np.asarray(t) <= 0):
        raise ValueError("barenblatt profile requires t > 0")
    if m_exp <= 1:
        raise ValueError("exponent must exceed 1")
    k = 1.0 / (m_exp + 1)
    x = np.asarray(x, dtype=float)
    core = 1.0 - k * (m_exp - 1) / (2.0 * m_exp) * np.abs(x) ** 2 / t ** (2 * k)
    return t ** (-k) * np.maximum(core, 0.0) ** (1.0 / (m_exp - 1))


def _implicit_advection(u0, u0_prime_max):
    """Exact smooth solution of u_t + (u^2/2)_x = 0 by characteristics.

    Solves ``w = u0(x - w t)`` by Newton iteration; valid while
    ``t * max|u0'| < 1`` (pre-shock).
    """

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        if t == 0:
            return u0(x)
        if t * u0_prime_max >= 1.0:
            raise ValueError(f"characteristics cross at t = {1.0 / u0_prime_max:.3f}")
        w = u0(x)
        for _ in range(100):
            xi = x - w * t
            f = w - u0(xi)
            # derivative of u0 by centered finite difference is avoided:
            # the registry passes analytic profiles, differentiate exactly
            fp = 1.0 + t * _D_U0[u0](xi)
            step = f / fp
            w = w - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return w

    return exact


# analytic derivatives of the initial profiles used by the Newton solve
def _burgers_u0(x):
    return np.sin(x) + 0.5


def _burgers_u0_prime(x):
    return np.cos(x)


def _inflow_u0(x):
    return 0.5 * np.sin(x) + 0.5


def _inflow_u0_prime(x):
    return 0.5 * np.cos(x)


def _burgers2d_u0(xi):
    return 0.5 + np.sin(xi)


def _burgers2d_u0_prime(xi):
    return np.cos(xi)


_D_U0 = {
    _burgers_u0: _burgers_u0_prime,
    _inflow_u0: _inflow_u0_prime,
    _burgers2d_u0: _burgers2d_u0_prime,
}


def _step_profile(x):
    xm = np.mod(np.asarray(x, dtype=float), TWO_PI)
    return np.where((xm > 0) & (xm <= np.pi), 1.0, 0.0)


def _square_ramp(x, y):
    """1 inside the inner square, 0 outside the outer one, linear between.

    The transition uses the max-norm radius, keeping the range in [0, 1].
    """
    r = np.maximum(np.abs(x), np.abs(y))
    return np.clip(2.0 * (1.0 - r), 0.0, 1.0)


def _pme_1d(m_exp: int) -> Problem1D:
    def diffusion(u):
        return np.maximum(u, 0.0) ** m_exp  # guards pre-limiter negatives

    def exact(x, t):
        return barenblatt(x, 1.0 + t, m_exp)

    return Problem1D(
        name=f"pme-1d-m{m_exp}",
        x_lo=-6.0, x_hi=6.0,
        bounds=Bounds(0.0, 1.0),
        initial=lambda x: barenblatt(x, 1.0, m_exp),
        diffusion=diffusion,
        max_aprime=float(m_exp),  # m * upper^{m-1}
        exact=exact,
        default_T=1.0,
    )


def _pme_2d(m_exp: int) -> Problem2D:
    def diffusion(u):
        return np.maximum(u, 0.0) ** m_exp

    return Problem2D(
        name=f"2d-pme-m{m_exp}",
        x_lo=-2.0, x_hi=2.0, y_lo=-2.0, y_hi=2.0,
        bounds=Bounds(0.0, 1.0),
        initial=_square_ramp,
        diffusion_x=diffusion, diffusion_y=diffusion,
        max_aprime=float(m_exp), max_bprime=float(m_exp),
        default_T=0.01,
    )


def _build(problem_id: str):
    if problem_id == "linadv-sin4":
        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            bounds=Bounds(0.5, 1.5),
            initial=lambda x: 0.5 + np.sin(x) ** 4,
            flux=lambda u: u, max_fprime=1.0, min_fprime=1.0,
            exact=lambda x, t: 0.5 + np.sin(x - t) ** 4,
            default_T=10.0,
        )
    if problem_id == "linadv-sin4-half":
        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            bounds=Bounds(0.5, 1.0),
            initial=lambda x: 0.5 + 0.5 * np.sin(x) ** 4,
            flux=lambda u: u, max_fprime=1.0, min_fprime=1.0,
            exact=lambda x, t: 0.5 + 0.5 * np.sin(x - t) ** 4,
            default_T=10.0,
        )
    if problem_id == "linadv-step":
        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            bounds=Bounds(0.0, 1.0),
            initial=_step_profile,
            flux=lambda u: u, max_fprime=1.0, min_fprime=1.0,
            exact=lambda x, t: _step_profile(x - t),
            default_T=10.0,
        )
    if problem_id == "burgers-sin":
        return Problem1D(
            name=problem_id, x_lo=-np.pi, x_hi=np.pi,
            bounds=Bounds(-0.5, 1.5),
            initial=_burgers_u0,
            flux=lambda u: 0.5 * u * u, max_fprime=1.5, min_fprime=-0.5,
            exact=_implicit_advection(_burgers_u0, 1.0),
            default_T=0.5,
        )
    if problem_id == "convdiff-lin":
        c, d = 1.0, 0.001
        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            bounds=Bounds(-1.0, 1.0),
            initial=np.sin,
            flux=lambda u: c * u, max_fprime=c, min_fprime=c,
            diffusion=lambda u: d * u, max_aprime=d,
            exact=lambda x, t: np.exp(-d * t) * np.sin(x - c * t),
            default_T=1.0,
        )
    if problem_id == "pme-1d" or problem_id.startswith("pme-1d-m"):
        m_exp = 5 if problem_id == "pme-1d" else int(problem_id.rsplit("m", 1)[1])
        return _pme_1d(m_exp)
    if problem_id == "inflow-burgers":
        periodic_exact = _implicit_advection(_inflow_u0, 0.5)
        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            boundary="inflow-outflow",
            bounds=Bounds(0.0, 1.0),
            initial=_inflow_u0,
            flux=lambda u: 0.5 * u * u, max_fprime=1.0, min_fprime=0.0,
            exact=periodic_exact,
            left_value=lambda t: float(periodic_exact(np.array([0.0]), t)[0]),
            default_T=0.5,
        )
    if problem_id == "dirichlet-convdiff":
        c, d = 1.0, 0.01

        def exact(x, t):
            return np.exp(-d * t) * np.cos(x - c * t)

        return Problem1D(
            name=problem_id, x_lo=0.0, x_hi=TWO_PI,
            boundary="dirichlet",
            bounds=Bounds(-1.0, 1.0),
            initial=np.cos,
            flux=lambda u: c * u, max_fprime=c, min_fprime=c,
            diffusion=lambda u: d * u, max_aprime=d,
            exact=exact,
            left_value=lambda t: float(np.exp(-d * t) * np.cos(-c * t)),
            right_value=lambda t: float(np.exp(-d * t) * np.cos(TWO_PI - c * t)),
            default_T=1.0,
        )
    if problem_id == "2d-linadv":
        return Problem2D(
            name=problem_id,
            x_lo=0.0, x_hi=TWO_PI, y_lo=0.0, y_hi=TWO_PI,
            bounds=Bounds(0.5, 1.0),
            initial=lambda x, y: 0.5 + 0.5 * np.sin(x + y) ** 4,
            flux_x=lambda u: u, flux_y=lambda u: u,
            max_fprime=1.0, max_gprime=1.0,
            exact=lambda x, y, t: 0.5 + 0.5 * np.sin(x + y - 2 * t) ** 4,
            default_T=1.0,
        )
    if problem_id == "2d-burgers":
        exact_1d = _implicit_advection(_burgers2d_u0, 1.0)
        return Problem2D(
            name=problem_id,
            x_lo=-np.pi, x_hi=np.pi, y_lo=-np.pi, y_hi=np.pi,
            bounds=Bounds(-0.5, 1.5),
            initial=lambda x, y: 0.5 + np.sin(x + y),
            flux_x=lambda u: 0.5 * u * u, flux_y=lambda u: 0.5 * u * u,
            max_fprime=1.5, max_gprime=1.5,
            # u(x, y, t) = w(x + y, 2t) for the diagonal profile
            exact=lambda x, y, t: exact_1d(x + y, 2.0 * t),
            default_T=0.2,
        )
    if problem_id == "2d-convdiff":
        c, d = 1.0, 0.001
        return Problem2D(
            name=problem_id,
            x_lo=0.0, x_hi=TWO_PI, y_lo=0.0, y_hi=TWO_PI,
            bounds=Bounds(-1.0, 1.0),
            initial=lambda x, y: np.sin(x + y),
            flux_x=lambda u: c * u, flux_y=lambda u: c * u,
            max_fprime=c, max_gprime=c,
            diffusion_x=lambda u: d * u, diffusion_y=lambda u: d * u,
            max_aprime=d, max_bprime=d,
            exact=lambda x, y, t: np.exp(-2 * d * t) * np.sin(x + y - 2 * c * t),
            default_T=0.5,
        )
    if problem_id == "2d-pme" or problem_id.startswith("2d-pme-m"):
        m_exp = 3 if problem_id == "2d-pme" else int(problem_id.rsplit("m", 1)[1])
        return _pme_2d(m_exp)
    raise KeyError(f"unknown problem id {problem_id!r}")


def builtin(problem_id: str):
    """Return the fully populated problem for a registry id."""
    return _build(problem_id)


BUILTIN_IDS = (
    "linadv-sin4", "linadv-sin4-half", "linadv-step", "burgers-sin",
    "convdiff-lin", "pme-1d", "pme-1d-m5", "pme-1d-m8", "inflow-burgers",
    "dirichlet-convdiff", "2d-linadv", "2d-burgers", "2d-convdiff",
    "2d-pme", "2d-pme-m3", "2d-pme-m4", "2d-pme-m5",
)
