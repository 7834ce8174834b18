"""Backward integration of the scalar Riccati system and the value assembly.

The unified system, with kappa and lam from the variant's effective
coefficients, is

    beta' + 2a beta - kappa beta^2 + q + qbar = 0,      beta(T) = qT + qbarT
    alpha' + a alpha + (abar beta - qbar) m - kappa alpha beta = 0,
                                                        alpha(T) = -qbarT m(T)
    gamma' + abar alpha m + (sigma^2/2) beta + (qbar/2) m^2
           - (kappa/2) alpha^2 = 0,                     gamma(T) = (qbarT/2) m(T)^2
    eta'  + [2a + abar - (kappa+lam) beta] eta - lam eta^2
           + (abar beta - qbar) = 0,                    eta(T) = -qbarT

Integration is classical RK4 on a uniform grid, backward in time.  Riccati
blow-up is reported as a status, never as an overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .model import (
    EffectiveCoefficients,
    ModelParams,
    TimeGrid,
    Trajectory,
    effective_coefficients,
)

__all__ = [
    "SolveStatus",
    "RiccatiSolution",
    "ValueCoefficients",
    "FiniteEscapeError",
    "solve_beta",
    "solve_alpha",
    "solve_gamma",
    "solve_eta",
    "solve_system",
    "closed_form_constant_riccati",
    "assemble_value",
    "DEFAULT_BLOWUP_CAP",
]

DEFAULT_BLOWUP_CAP = 1e12


class FiniteEscapeError(Exception):
    """Raised when a closed-form Riccati solution has a pole inside [t, T]."""

    def __init__(self, escape_time: float):
        self.escape_time = escape_time
        super().__init__(f"finite escape at t = {escape_time:g}")


@dataclass(frozen=True)
class SolveStatus:
    admissible: bool
    blow_up_time: float | None = None

    @classmethod
    def ok(cls) -> "SolveStatus":
        return cls(True, None)

    @classmethod
    def blow_up(cls, at: float) -> "SolveStatus":
        return cls(False, at)


@dataclass(frozen=True)
class RiccatiSolution:
    beta: Trajectory
    alpha: Trajectory
    gamma: Trajectory
    status: SolveStatus
    eta: Trajectory | None = None


@dataclass(frozen=True)
class ValueCoefficients:
    """Value at t=0 and the linear feedback laws read off the solution."""
    value_at_0: float
    feedback_gain: Trajectory
    feedback_offset: Trajectory
    disturbance_gain: Trajectory | None = None
    disturbance_offset: Trajectory | None = None
    exp_value: float | None = None  # e^{theta * value_at_0}, risk-sensitive only


def _rk4_backward(f: Callable[[float, float], float],
                  yT: float,
                  grid: TimeGrid,
                  cap: float | None = None) -> tuple[np.ndarray, float | None]:
    """Integrate y' = f(t, y) backward from y(T) = yT over the grid.

    Returns (values, blow_up_time); values past a blow-up hold the last
    finite iterate and must not be consumed.
    """
    nodes = grid.nodes
    h = grid.dt
    vals = np.zeros(grid.n_steps + 1)
    vals[-1] = yT
    for k in range(grid.n_steps - 1, -1, -1):
        t1 = nodes[k + 1]
        y = vals[k + 1]
        k1 = f(t1, y)
        k2 = f(t1 - h / 2, y - h / 2 * k1)
        k3 = f(t1 - h / 2, y - h / 2 * k2)
        k4 = f(t1 - h, y - h * k3)
        ynew = y - h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if cap is not None and (not math.isfinite(ynew) or abs(ynew) > cap):
            return vals, _refine_escape(f, t1, y, h, cap)
        vals[k] = ynew
    return vals, None


def _rk4_partial(f, t1, y, step):
    k1 = f(t1, y)
    k2 = f(t1 - step / 2, y - step / 2 * k1)
    k3 = f(t1 - step / 2, y - step / 2 * k2)
    k4 = f(t1 - step, y - step * k3)
    return y - step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _refine_escape(f, t1: float, y1: float, h: float, cap: float) -> float:
    """Bisect the step fraction at which |y| first exceeds the cap."""
    lo, hi = 0.0, 1.0  # fraction of the backward step from t1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ymid = _rk4_partial(f, t1, y1, mid * h)
        if math.isfinite(ymid) and abs(ymid) <= cap:
            lo = mid
        else:
            hi = mid
        if (hi - lo) * h < 1e-6 * h:
            break
    return t1 - hi * h


def _beta_rhs(params: ModelParams, eff: EffectiveCoefficients):
    a, q, qbar = params.a, params.q, params.qbar

    def f(t, y):
        return eff.kappa(t) * y * y - 2 * a * y - (q(t) + qbar(t))

    return f


def _hermite_beta(params: ModelParams, beta: Trajectory) -> CubicHermiteSpline:
    """Cubic Hermite interpolant of beta using its own ODE for derivatives.

    Substage evaluation through this interpolant keeps the dependent
    backward solves at fourth order.
    """
    eff = effective_coefficients(params)
    nodes = beta.grid.nodes
    v = beta.values
    dv = eff.kappa(nodes) * v * v - 2 * params.a * v - (params.q(nodes) + params.qbar(nodes))
    return CubicHermiteSpline(nodes, v, dv)


def solve_beta(params: ModelParams, grid: TimeGrid,
               cap: float = DEFAULT_BLOWUP_CAP) -> tuple[Trajectory, SolveStatus]:
    """Solve the quadratic value-coefficient equation backward from T."""
    eff = effective_coefficients(params)
    betaT = params.qT + params.qbarT
    vals, t_blow = _rk4_backward(_beta_rhs(params, eff), betaT, grid, cap=cap)
    status = SolveStatus.ok() if t_blow is None else SolveStatus.blow_up(t_blow)
    return Trajectory(grid, vals), status


def solve_alpha(params: ModelParams, beta: Trajectory, m: Trajectory,
                grid: TimeGrid) -> Trajectory:
    """Solve the linear value-coefficient equation for a given mean path."""
    eff = effective_coefficients(params)
    bspl = _hermite_beta(params, beta)
    a, abar, qbar = params.a, params.abar, params.qbar

    def f(t, y):
        bv = bspl(t)
        return -a * y - (abar * bv - qbar(t)) * m(t) + eff.kappa(t) * bv * y

    alphaT = -params.qbarT * m(params.T)
    vals, _ = _rk4_backward(f, alphaT, grid)
    return Trajectory(grid, vals)


def solve_gamma(params: ModelParams, beta: Trajectory, alpha: Trajectory,
                m: Trajectory, grid: TimeGrid) -> Trajectory:
    """Backward quadrature for the constant value term."""
    eff = effective_coefficients(params)
    bspl = _hermite_beta(params, beta)
    a, abar, qbar, sigma = params.a, params.abar, params.qbar, params.sigma
    nodes = grid.nodes
    av = alpha.values
    # alpha's own ODE supplies Hermite derivatives for substage evaluation
    dav = (-a * av - (abar * beta.values - qbar(nodes)) * m(nodes)
           + eff.kappa(nodes) * beta.values * av)
    aspl = CubicHermiteSpline(nodes, av, dav)

    def f(t, y):
        avt = aspl(t)
        mt = m(t)
        return (-abar * avt * mt - 0.5 * sigma ** 2 * bspl(t)
                - 0.5 * qbar(t) * mt * mt + 0.5 * eff.kappa(t) * avt * avt)

    mT = m(params.T)
    gammaT = 0.5 * params.qbarT * mT * mT
    vals, _ = _rk4_backward(f, gammaT, grid)
    return Trajectory(grid, vals)


def solve_eta(params: ModelParams, beta: Trajectory, grid: TimeGrid,
              cap: float = DEFAULT_BLOWUP_CAP) -> tuple[Trajectory, SolveStatus]:
    """Solve the refined equation for eta with alpha = eta * m.

    For the risk-neutral variant (kappa = lam = b^2/r) this is exactly the
    refined equation; the other variants use the same substitution carried
    through their state loop, validated against the fixed-point route.
    """
    eff = effective_coefficients(params)
    bspl = _hermite_beta(params, beta)
    a, abar, qbar = params.a, params.abar, params.qbar

    def f(t, y):
        bv = bspl(t)
        return (-(2 * a + abar - (eff.kappa(t) + eff.lam(t)) * bv) * y
                + eff.lam(t) * y * y - (abar * bv - qbar(t)))

    vals, t_blow = _rk4_backward(f, -params.qbarT, grid, cap=cap)
    status = SolveStatus.ok() if t_blow is None else SolveStatus.blow_up(t_blow)
    return Trajectory(grid, vals), status


def solve_system(params: ModelParams, m: Trajectory, grid: TimeGrid,
                 cap: float = DEFAULT_BLOWUP_CAP, with_eta: bool = False) -> RiccatiSolution:
    """Solve beta, alpha, gamma (and optionally eta) for a given mean path."""
    beta, status = solve_beta(params, grid, cap=cap)
    if not status.admissible:
        zero = Trajectory.zeros(grid)
        return RiccatiSolution(beta, zero, zero, status)
    alpha = solve_alpha(params, beta, m, grid)
    gamma = solve_gamma(params, beta, alpha, m, grid)
    eta = None
    if with_eta:
        eta, eta_status = solve_eta(params, beta, grid, cap=cap)
        if not eta_status.admissible:
            return RiccatiSolution(beta, alpha, gamma, eta_status, eta)
    return RiccatiSolution(beta, alpha, gamma, status, eta)


def closed_form_constant_riccati(a: float, kappa: float, Q: float,
                                 betaT: float, T: float, t: float) -> float:
    """Exact solution of beta' = kappa beta^2 - 2a beta - Q, beta(T) = betaT.

    Evaluates at time t <= T via the Moebius/hyperbolic closed form of the
    constant-coefficient equation.  Raises FiniteEscapeError when the
    solution has a pole inside (t, T].
    """
    if t > T:
        raise ValueError("t must be <= T")
    s = T - t  # backward time
    if kappa == 0.0:
        # linear equation: backward flow d beta/ds = 2a beta + Q
        if a == 0.0:
            return betaT + Q * s
        e = math.exp(2 * a * s)
        return e * betaT + Q * (e - 1.0) / (2 * a)

    # beta = u'/(kappa u) with u'' - 2a u' - kappa Q u = 0, u(0)=1, u'(0)=kappa betaT
    disc = a * a + kappa * Q
    c2_num = kappa * betaT - a
    if disc > 0:
        w = math.sqrt(disc)
        c2 = c2_num / w
        # u(s) = e^{as}(cosh ws + c2 sinh ws); zero iff tanh(ws) = -1/c2 with c2 < -1
        if c2 < -1.0:
            s0 = math.atanh(-1.0 / c2) / w
            if 0.0 < s0 <= s:
                raise FiniteEscapeError(T - s0)
        ch, sh = math.cosh(w * s), math.sinh(w * s)
        u = ch + c2 * sh
        du = a * u + w * (sh + c2 * ch)
        return du / (kappa * u)
    if disc == 0:
        # u(s) = e^{as}(1 + c s)
        c = c2_num
        if c < 0:
            s0 = -1.0 / c
            if 0.0 < s0 <= s:
                raise FiniteEscapeError(T - s0)
        u = 1.0 + c * s
        du = a * u + c
        return du / (kappa * u)
    # disc < 0: trigonometric branch, poles are unavoidable for large horizons
    w = math.sqrt(-disc)
    c2 = c2_num / w
    s0 = math.atan2(-1.0, c2) / w
    while s0 <= 0.0:
        s0 += math.pi / w
    if s0 <= s:
        raise FiniteEscapeError(T - s0)
    cs, sn = math.cos(w * s), math.sin(w * s)
    u = cs + c2 * sn
    du = a * u + w * (-sn + c2 * cs)
    return du / (kappa * u)


def assemble_value(params: ModelParams, beta: Trajectory, alpha: Trajectory,
                   gamma: Trajectory) -> ValueCoefficients:
    """Value at t=0 and the feedback/disturbance laws."""
    grid = beta.grid
    nodes = grid.nodes
    rv = np.asarray(params.r(nodes), dtype=float)
    gain = Trajectory(grid, -params.b * beta.values / rv)
    offset = Trajectory(grid, -params.b * alpha.values / rv)
    value0 = (0.5 * beta.values[0] * params.x0 ** 2
              + alpha.values[0] * params.x0 + gamma.values[0])
    dist_gain = dist_offset = None
    if params.variant.uses_disturbance:
        sv = np.asarray(params.s(nodes), dtype=float)
        dist_gain = Trajectory(grid, params.c * beta.values / sv)
        dist_offset = Trajectory(grid, params.c * alpha.values / sv)
    exp_value = None
    if params.variant.uses_theta:
        exp_value = math.exp(params.theta * value0)
    return ValueCoefficients(
        value_at_0=float(value0),
        feedback_gain=gain,
        feedback_offset=offset,
        disturbance_gain=dist_gain,
        disturbance_offset=dist_offset,
        exp_value=exp_value,
    )
