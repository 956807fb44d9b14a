"""SIR dynamics with a lockdown control.

State is the vector of population fractions (S, I, R, D). A lockdown of
intensity L removes a fraction theta*L of contacts on both sides of a
meeting, so new infections scale with (1 - theta*L)^2. Infected people
exit at rate gamma; of the exit flow, a congestion-dependent share
phi(I) = phi0 + kappa*I dies and the rest recovers. All rates are per
year and all compartments are fractions of the initial population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EpidemicState",
    "IntegrationError",
    "PlannerParams",
    "Trajectory",
    "basic_reproduction_number",
    "fatality_rate",
    "integrate_trajectory",
    "sir_derivatives",
    "stability_bound",
]

# Compartments may stray this far outside [0, 1] before a step is rejected.
_STATE_ATOL = 1e-12
# The four compartments must sum to 1 within this budget at every sample.
_SUM_ATOL = 1e-9


class IntegrationError(RuntimeError):
    """A trajectory step left the admissible state region."""


@dataclass(frozen=True)
class PlannerParams:
    """Constants of the epidemic and of the planner's objective.

    Defaults encode the benchmark configuration used throughout the
    tests. beta_contact, gamma and L_bar are modelling choices of this
    package, not values taken from any particular calibration source;
    phi0 and kappa are pinned to gamma so that 1% of exits die at I = 0
    and 3% die when 40% of the population is infected.
    """

    beta_contact: float = 36.0   # infectious contacts per infected per year
    gamma: float = 18.0          # exit rate from infection, per year
    phi0: float = None           # baseline death rate; default 0.01 * gamma
    kappa: float = None          # congestion slope; default 0.05 * gamma
    theta: float = 0.5           # lockdown effectiveness, in (0, 1)
    L_bar: float = 0.7           # maximum lockdown fraction, in (0, 1]
    tau: int = 1                 # 1: recovered are testable and exempt; 0: not
    r: float = 0.05              # pure discount rate, per year
    nu: float = 1.0 / 1.5        # vaccine/cure arrival hazard, per year
    w: float = 1.0               # output per worker per year
    cost_per_death: float = 20.0  # output units lost per death
    chi: float = 0.0             # extra per-death penalty, output units

    def __post_init__(self):
        if self.phi0 is None:
            object.__setattr__(self, "phi0", 0.01 * self.gamma)
        if self.kappa is None:
            object.__setattr__(self, "kappa", 0.05 * self.gamma)
        for name in ("beta_contact", "gamma", "r", "nu", "w"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.phi0 <= self.gamma:
            raise ValueError("phi0 must lie in (0, gamma]")
        if self.kappa < 0.0:
            raise ValueError("kappa must be non-negative")
        if self.phi0 + self.kappa > self.gamma:
            raise ValueError("phi0 + kappa must not exceed gamma")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 < self.L_bar <= 1.0:
            raise ValueError("L_bar must lie in (0, 1]")
        if self.tau not in (0, 1):
            raise ValueError("tau must be 0 or 1")
        if self.cost_per_death < 0.0:
            raise ValueError("cost_per_death must be non-negative")
        if self.chi < 0.0:
            raise ValueError("chi must be non-negative")


@dataclass(frozen=True)
class EpidemicState:
    """Population shares (S, I, R, D) at time t.

    Construction clips rounding noise of at most 1e-9 back into [0, 1]
    and rejects anything larger; the four shares must sum to one within
    1e-9.
    """

    S: float
    I: float
    R: float = 0.0
    D: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        total = 0.0
        for name in ("S", "I", "R", "D"):
            v = float(getattr(self, name))
            if v < -1e-9 or v > 1.0 + 1e-9:
                raise ValueError(f"{name}={v!r} outside [0, 1]")
            total += v
            object.__setattr__(self, name, min(max(v, 0.0), 1.0))
        if abs(total - 1.0) > _SUM_ATOL:
            raise ValueError(f"compartments sum to {total!r}, expected 1")

    @classmethod
    def _unchecked(cls, S, I, R, D, t):
        # Internal fast path for integrator callbacks; skips validation.
        obj = object.__new__(cls)
        object.__setattr__(obj, "S", S)
        object.__setattr__(obj, "I", I)
        object.__setattr__(obj, "R", R)
        object.__setattr__(obj, "D", D)
        object.__setattr__(obj, "t", t)
        return obj

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.R, self.D], dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Sampled path: times, compartments and the lockdown applied."""

    t: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    D: np.ndarray
    L: np.ndarray

    def __len__(self):
        return self.t.size

    def state_at(self, k: int) -> EpidemicState:
        return EpidemicState(self.S[k], self.I[k], self.R[k], self.D[k],
                             t=self.t[k])


def fatality_rate(I, params: PlannerParams):
    """Death rate phi(I) = phi0 + kappa * I among exits, per year."""
    arr = np.asarray(I, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("infected share outside [0, 1]")
    out = params.phi0 + params.kappa * arr
    return float(out) if out.ndim == 0 else out


def basic_reproduction_number(params: PlannerParams) -> float:
    """R0 = beta / gamma for the uncontrolled epidemic."""
    return params.beta_contact / params.gamma


def stability_bound(params: PlannerParams) -> float:
    """Largest step size the fixed-step integrator accepts."""
    return 0.1 / max(params.beta_contact, params.gamma)


def _check_lockdown(L: float, params: PlannerParams):
    if not 0.0 <= L <= params.L_bar:
        raise ValueError(f"lockdown L={L!r} outside [0, {params.L_bar}]")


def sir_derivatives(state: EpidemicState, L: float, params: PlannerParams):
    """Time derivatives (dS, dI, dR, dD) under lockdown L.

    The flows are paired so the four derivatives cancel to zero up to a
    couple of rounding ulps.
    """
    _check_lockdown(L, params)
    flow = (params.beta_contact * state.S * state.I
            * (1.0 - params.theta * L) ** 2)
    exits = params.gamma * state.I
    dD = (params.phi0 + params.kappa * state.I) * state.I
    return (-flow, flow - exits, exits - dD, dD)


def _rhs(y: np.ndarray, L: float, params: PlannerParams) -> np.ndarray:
    # Array twin of sir_derivatives, used inside the integrator.
    S, I = y[0], y[1]
    flow = params.beta_contact * S * I * (1.0 - params.theta * L) ** 2
    exits = params.gamma * I
    dD = (params.phi0 + params.kappa * I) * I
    return np.array([-flow, flow - exits, exits - dD, dD])


def _integrate(state0: EpidemicState, control, params: PlannerParams,
               horizon: float, dt: float, extra_rhs=None, n_extra: int = 0):
    """Fixed-step RK4 on the closed-loop system, plus optional quadratures.

    extra_rhs(y4, L, t) may return extra derivative components (e.g.
    discounted running costs) appended to the state vector. Returns the
    sampled trajectory arrays and the final extra components.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if dt > stability_bound(params) * (1.0 + 1e-12):
        raise ValueError(
            f"dt={dt!r} exceeds stability bound {stability_bound(params)!r}")
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")

    def full_rhs(y, t):
        st = EpidemicState._unchecked(y[0], y[1], y[2], y[3], t)
        L = float(control(st, t))
        _check_lockdown(L, params)
        base = _rhs(y[:4], L, params)
        if extra_rhs is None:
            return base, L
        out = np.empty(4 + n_extra)
        out[:4] = base
        out[4:] = extra_rhs(y[:4], L, t)
        return out, L

    n_full = int(math.floor(horizon / dt + 1e-9))
    steps = [dt] * n_full
    rem = horizon - n_full * dt
    if rem > 1e-12 * max(1.0, horizon):
        steps.append(rem)
    n = len(steps)

    y = np.zeros(4 + n_extra)
    y[:4] = state0.as_array()
    t = state0.t
    ts = np.empty(n + 1)
    path = np.empty((n + 1, 4))
    Ls = np.empty(n + 1)
    ts[0] = t
    path[0] = y[:4]

    for k, h in enumerate(steps):
        k1, L_here = full_rhs(y, t)
        k2, _ = full_rhs(y + 0.5 * h * k1, t + 0.5 * h)
        k3, _ = full_rhs(y + 0.5 * h * k2, t + 0.5 * h)
        k4, _ = full_rhs(y + h * k3, t + h)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(y[:4] < -_STATE_ATOL) or np.any(y[:4] > 1.0 + _STATE_ATOL):
            raise IntegrationError(
                f"compartment escaped [0, 1] at step {k} (t={t + h:.6f}): "
                f"{y[:4].tolist()}")
        y[:4] = np.clip(y[:4], 0.0, 1.0)
        t += h
        Ls[k] = L_here
        ts[k + 1] = t
        path[k + 1] = y[:4]

    # Lockdown that would apply at the final sample.
    st = EpidemicState._unchecked(*path[-1], ts[-1])
    Ls[n] = float(control(st, ts[-1]))

    traj = Trajectory(t=ts, S=path[:, 0], I=path[:, 1], R=path[:, 2],
                      D=path[:, 3], L=Ls)
    return traj, (y[4:].copy() if n_extra else None)


def integrate_trajectory(state0: EpidemicState, control,
                         params: PlannerParams, horizon: float,
                         dt: float) -> Trajectory:
    """Integrate the controlled SIR system with fixed-step RK4.

    control(state, t) must return a lockdown intensity in [0, L_bar];
    it is re-evaluated at every RK4 stage. dt must satisfy
    dt <= 0.1 / max(beta, gamma).
    """
    traj, _ = _integrate(state0, control, params, horizon, dt)
    return traj
