"""SSP time integration driving the mean-update / recovery schemes.

Provides forward Euler, the optimal six-step fourth-order SSP multistep
method and the five-stage fourth-order SSP Runge-Kutta method.  Both high
order methods are convex combinations of forward-Euler substeps, so every
property the Euler step guarantees for the weighted means (in particular
bound preservation under the CFL constraint) carries over when the time
step is shrunk by the method's SSP coefficient.

The limiter runs after every stage of the Runge-Kutta method and once per
step of the multistep method; per-stage limiting in Runge-Kutta methods
may reduce the observed convection order because inner stages are
low-order approximations in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .limiters import LimiterReport
from .schemes1d import CflError

# Six-step fourth-order SSP multistep method (optimal nonnegative-beta
# tableau; its SSP coefficient is the real root of 100 x^3 + 25 x^2 + 66 x
# - 12, about 0.16476, quoted as 0.1648).  u^{n+1} combines the states and
# slopes at the given lags.
MS4_ALPHA = {
    1: 0.342460855717012075984103013045,
    4: 0.191798259434736072591570614134,
    5: 0.093562124939009442534449960677,
    6: 0.372178759909242408889876412145,
}
MS4_BETA = {
    1: 2.078553105578055306087676550430,
    4: 1.164112222279692927035746180770,
    5: 0.567871749748709799238471014632,
}
MS4_STEPS = 6
SSP_COEFF_MS4 = 0.1648

# Five-stage fourth-order SSP Runge-Kutta method in Shu-Osher form: each
# stage is sum_j alpha u^(j) + dt beta F(u^(j)); SSP coefficient 1.508.
RK54_STAGES = (
    ((0, 1.0, 0.391752226571890),),
    ((0, 0.444370493651235, 0.0), (1, 0.555629506348765, 0.368410593050371)),
    ((0, 0.620101851488403, 0.0), (2, 0.379898148511597, 0.251891774271694)),
    ((0, 0.178079954393132, 0.0), (3, 0.821920045606868, 0.544974750228521)),
    ((2, 0.517231671970585, 0.0), (3, 0.096059710526147, 0.063692468666290),
     (4, 0.386708617503269, 0.226007483236906)),
)
SSP_COEFF_RK4 = 1.508


def rk54_stage_times() -> tuple[float, ...]:
    """Time abscissae (in units of dt) of the Shu-Osher stages."""
    c = [0.0]
    for terms in RK54_STAGES:
        c.append(sum(a * c[j] + b for j, a, b in terms))
    return tuple(c)


_SSP_COEFFS = {"fe": 1.0, "ms4": SSP_COEFF_MS4, "rk4": SSP_COEFF_RK4}


@dataclass(frozen=True)
class IntegratorSpec:
    """Method selection plus limiter placement.

    ``limit_every_stage`` only affects the Runge-Kutta method (the
    multistep method limits once per step by construction); the multistep
    startup uses Runge-Kutta priming steps at the same dt.
    """

    method: str = "ms4"
    limit_every_stage: bool = True

    def __post_init__(self):
        if self.method not in _SSP_COEFFS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def ssp_coefficient(self) -> float:
        return _SSP_COEFFS[self.method]


class OdeScheme:
    """Adapter exposing a plain ODE u' = f(u, t) to the integrators."""

    def __init__(self, f):
        self.f = f
        self.bp_limit = False

    def means(self, u):
        return u

    def rhs_means(self, u, t=0.0):
        return self.f(u, t)

    def recover(self, q, t=0.0, limiting=None):
        return q, LimiterReport()

    def admissible_dt_fe(self):
        return math.inf


class SspIntegrator:
    """Stateful driver: owns the multistep history for one solve."""

    def __init__(self, scheme, spec: IntegratorSpec, dt: float, *,
                 check_cfl: bool = True):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.scheme = scheme
        self.spec = spec
        self.dt = float(dt)
        if check_cfl:
            admissible = spec.ssp_coefficient * scheme.admissible_dt_fe()
            if self.dt > admissible * (1.0 + 1e-9):
                raise CflError(self.dt, admissible, spec.method)
        self._hist: list[tuple] = []  # (state, means, rhs, t), newest last
        self.report = LimiterReport()

    def _entry(self, u, t):
        return (u, self.scheme.means(u), self.scheme.rhs_means(u, t), t)

    def start(self, u0, t0=0.0):
        self._hist = [self._entry(np.asarray(u0, dtype=float), t0)]
        return self

    def _rk_step(self, limit_stages: bool):
        u0, m0, r0, t = self._hist[-1]
        dt = self.dt
        stages = [(m0, r0)]
        times = rk54_stage_times()
        u_stage = u0
        for k, terms in enumerate(RK54_STAGES, start=1):
            q = 0.0
            for j, a, b in terms:
                mj, rj = stages[j]
                q = q + a * mj + dt * b * rj
            t_stage = t + times[k] * dt
            final = k == len(RK54_STAGES)
            limiting = None if (limit_stages or final) else False
            u_stage, rep = self.scheme.recover(q, t_stage, limiting=limiting)
            self.report = self.report.merge(rep)
            if not final:
                stages.append((self.scheme.means(u_stage),
                               self.scheme.rhs_means(u_stage, t_stage)))
        return u_stage, t + dt

    def _ms_step(self):
        dt = self.dt
        t_new = self._hist[-1][3] + dt
        q = 0.0
        for lag, a in MS4_ALPHA.items():
            q = q + a * self._hist[-lag][1]
        for lag, b in MS4_BETA.items():
            q = q + dt * b * self._hist[-lag][2]
        u_new, rep = self.scheme.recover(q, t_new)
        self.report = self.report.merge(rep)
        return u_new, t_new

    def advance(self):
        """Advance one step and return the new state."""
        if not self._hist:
            raise RuntimeError("integrator not started")
        method = self.spec.method
        if method == "fe":
            u, m, r, t = self._hist[-1]
            u_new, rep = self.scheme.recover(m + self.dt * r, t + self.dt)
            self.report = self.report.merge(rep)
            t_new = t + self.dt
        elif method == "rk4":
            u_new, t_new = self._rk_step(self.spec.limit_every_stage)
        elif method == "ms4":
            if len(self._hist) < MS4_STEPS:
                # prime the history window with Runge-Kutta steps at the same dt
                u_new, t_new = self._rk_step(limit_stages=True)
            else:
                u_new, t_new = self._ms_step()
        self._hist.append(self._entry(u_new, t_new))
        if len(self._hist) > MS4_STEPS:
            self._hist.pop(0)
        return u_new

    @property
    def state(self):
        return self._hist[-1][0]

    @property
    def time(self) -> float:
        return self._hist[-1][3]


def advance(state, scheme, dt: float, spec: IntegratorSpec, t: float = 0.0,
            *, check_cfl: bool = True):
    """One step of the selected method from a bare state (no history).

    Multistep selection falls back to the Runge-Kutta priming step, since
    a single state carries no history window.
    """
    integ = SspIntegrator(scheme, spec, dt, check_cfl=check_cfl).start(state, t)
    return integ.advance()


def integrate_to(scheme, T: float, spec: IntegratorSpec, *,
                 dt: float | None = None, dt_cap: float | None = None,
                 check_cfl: bool = True):
    """Integrate from the scheme problem's initial data to time T.

    The target step (``dt`` or the CFL-and-SSP-limited maximum) is reduced
    to the nearest divisor of T so the multistep history keeps a constant
    step and the final time is hit exactly.  Returns
    ``(state, step_log, report)`` where ``step_log`` lists the step times.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if dt is None:
        dt = spec.ssp_coefficient * scheme.admissible_dt_fe()
        if dt_cap is not None:
            dt = min(dt, dt_cap)
    if not math.isfinite(dt) or dt <= 0:
        raise ValueError("no finite time step available; supply dt or dt_cap")
    nsteps = max(1, math.ceil(T / dt * (1.0 - 1e-12)))
    dt = T / nsteps
    u0, t0 = scheme.initial_state()
    integ = SspIntegrator(scheme, spec, dt, check_cfl=check_cfl).start(u0, t0)
    log = []
    for k in range(1, nsteps + 1):
        integ.advance()
        # keep the clock exact: t_k = T * k / nsteps
        t_k = T * (k / nsteps) + t0
        integ._hist[-1] = integ._hist[-1][:3] + (t_k,)
        log.append(t_k)
    return integ.state, log, integ.report
