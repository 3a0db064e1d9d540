"""Spatially homogeneous repulsive system in 3D.

With f independent of x the field obeys phi'' = mu(t), and the Vlasov
equation is solved by f(t, p) = f_in(p e^D) e^{4D} with D = phi(t) - phi(0).
For an isotropic profile this reduces mu to a radial integral in D alone, so
the problem becomes a scalar second-order ODE that blows up in finite time.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfigError, InputError, PropertyViolation
from .initial_data import RADIAL_FAMILIES

BLOWUP = "blowup"
NO_BLOWUP = "no_blowup"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class HomogeneousState:
    t: float
    phi: float
    dphi: float
    phi_init: float

    def __post_init__(self):
        if not all(np.isfinite([self.t, self.phi, self.dphi, self.phi_init])):
            raise InputError("homogeneous state must be finite")

    @property
    def delta(self):
        return self.phi - self.phi_init

    @classmethod
    def initial(cls, phi0, dphi0, t=0.0):
        return cls(t, phi0, dphi0, phi0)


@dataclass(frozen=True, eq=False)
class MomentumProfile:
    """Isotropic f_in(|p|) tabulated on q_j = j*P0/n, j = 0..n; zero beyond P0."""

    radius: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise InputError("profile needs at least 3 tabulated values")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise InputError("profile radius must be positive")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InputError("profile values must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def q(self):
        return np.linspace(0.0, self.radius, self.values.size)

    @property
    def dq(self):
        return self.radius / (self.values.size - 1)

    @classmethod
    def from_function(cls, func: Callable, radius, n=2000):
        q = np.linspace(0.0, radius, n + 1)
        return cls(radius, np.clip(func(q), 0.0, None))

    @classmethod
    def family(cls, name, radius=1.0, mu0=None, n=2000):
        """Named radial shape, rescaled so that mu(0) equals ``mu0`` when given."""
        try:
            shape = RADIAL_FAMILIES[name]
        except KeyError:
            raise ConfigError(f"unknown radial family {name!r}; choose from {sorted(RADIAL_FAMILIES)}") from None
        prof = cls.from_function(lambda q: shape(q, radius), radius, n)
        return prof.normalized(mu0) if mu0 is not None else prof

    def scaled(self, factor):
        return MomentumProfile(self.radius, self.values * factor)

    def normalized(self, mu0):
        if mu0 < 0:
            raise ConfigError("target mu(0) must be non-negative")
        base = mu_of_delta(self, 0.0)
        if base == 0.0:
            if mu0 == 0.0:
                return self
            raise ConfigError("cannot normalize a zero profile to a positive mu(0)")
        return self.scaled(mu0 / base)

    def number_density(self):
        """4 pi int f q^2 dq, the limit of mu(D) e^{-D} as D -> infinity."""
        return 4.0 * np.pi * float(np.trapezoid(self.values * self.q ** 2, dx=self.dq))


def mu_of_delta(profile, delta):
    """mu(D) = e^D 4 pi int_0^P0 f(q) q^2 / sqrt(1 + q^2 e^{-2D}) dq (trapezoid)."""
    q = profile.q
    w = q * q * np.exp(-2.0 * delta)
    return float(np.exp(delta) * 4.0 * np.pi
                 * np.trapezoid(profile.values * q * q / np.sqrt(1.0 + w), dx=profile.dq))


def dmu_ddelta(profile, delta):
    """Exact derivative of the quadrature in ``mu_of_delta``; always >= mu."""
    q = profile.q
    w = q * q * np.exp(-2.0 * delta)
    integrand = profile.values * q * q * (1.0 / np.sqrt(1.0 + w) + w / (1.0 + w) ** 1.5)
    return float(np.exp(delta) * 4.0 * np.pi * np.trapezoid(integrand, dx=profile.dq))


@dataclass
class Controls:
    dt: float = 1e-3
    # 1e3 is out of reach: e^{-phi/2} falls below the resolution of t near 70
    phi_max: float = 30.0
    max_steps: int = 200_000
    t_max: float = 50.0
    halve_at: float = 0.1

    def __post_init__(self):
        if not (self.dt > 0 and self.phi_max > 0 and self.max_steps > 0 and self.t_max > 0):
            raise ConfigError("controls need positive dt, phi_max, max_steps, t_max")


@dataclass
class Trajectory:
    t: List[float] = field(default_factory=list)
    phi: List[float] = field(default_factory=list)
    dphi: List[float] = field(default_factory=list)
    mu: List[float] = field(default_factory=list)
    dmu: List[float] = field(default_factory=list)

    def append(self, t, phi, dphi, mu, dmu):
        self.t.append(t)
        self.phi.append(phi)
        self.dphi.append(dphi)
        self.mu.append(mu)
        self.dmu.append(dmu)

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in ("t", "phi", "dphi", "mu", "dmu")}


@dataclass
class BlowupReport:
    status: str
    trajectory: Trajectory
    t_star: Optional[float] = None
    bracket: Optional[tuple] = None
    t_cross: Optional[float] = None
    steps: int = 0
    final_dt: float = 0.0

    @property
    def bracket_width(self):
        return None if self.bracket is None else self.bracket[1] - self.bracket[0]


def _escape_time(a, D, b):
    """Time for y' = sqrt(D + b e^y) to reach infinity from y = 0 with y'(0) = a > 0.

    Closed form of int_a^inf 2 dw / (w^2 - D), w = sqrt(D + b e^y).
    """
    if b <= 0:
        return np.inf
    if abs(D) <= 1e-14 * a * a:
        return 2.0 / a
    if D > 0:
        r = np.sqrt(D)
        return float(np.log((a + r) / (a - r)) / r)
    r = np.sqrt(-D)
    return float(2.0 / r * (0.5 * np.pi - np.arctan(a / r)))


def blowup_bracket(profile, state):
    """Rigorous bounds on the remaining time to blow-up from ``state`` (dphi > 0).

    Since mu(D) e^{-D} increases with D, mu(D_c) e^{D - D_c} <= mu(D) <= N e^D
    for D >= D_c (N the number density).  Energy comparison with these two
    exponential sources gives an upper and a lower bound.
    """
    a = state.dphi
    mu_c = mu_of_delta(profile, state.delta)
    b_lo = 2.0 * mu_c
    b_hi = 2.0 * profile.number_density() * np.exp(state.delta)
    upper = _escape_time(a, a * a - b_lo, b_lo)
    lower = _escape_time(a, a * a - b_hi, b_hi)
    return state.t + lower, state.t + upper


def _rhs(profile, phi_init, y):
    return np.array([y[1], mu_of_delta(profile, y[0] - phi_init)])


def _rk4(profile, phi_init, y, h):
    k1 = _rhs(profile, phi_init, y)
    k2 = _rhs(profile, phi_init, y + 0.5 * h * k1)
    k3 = _rhs(profile, phi_init, y + 0.5 * h * k2)
    k4 = _rhs(profile, phi_init, y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_homogeneous(state0, profile, controls=None):
    """RK4 for phi'' = mu(phi - phi(0)) with halving whenever |phi'| dt > halve_at.

    Status ``blowup`` when phi crosses ``phi_max``; the estimate t* extrapolates
    e^{-phi/2} linearly to zero and is clipped into the rigorous bracket.
    ``no_blowup`` when mu vanishes identically (checked up to ``t_max``) or
    when phi' < 0 carries enough energy to escape to -infinity.
    ``inconclusive`` when ``max_steps`` runs out first.
    """
    c = controls or Controls()
    if not np.isfinite(state0.dphi):
        raise InputError("initial phi' must be finite")
    phi_init = state0.phi_init
    y = np.array([state0.phi, state0.dphi])
    t = state0.t
    dt = c.dt
    traj = Trajectory()
    zero = profile.number_density() == 0.0

    def record(t, y):
        d = y[0] - phi_init
        traj.append(t, float(y[0]), float(y[1]), mu_of_delta(profile, d), float(y[1]) * dmu_ddelta(profile, d))

    record(t, y)
    for step in range(1, c.max_steps + 1):
        while abs(y[1]) * dt > c.halve_at:
            dt *= 0.5
        if zero:
            dt_step = min(dt, c.t_max - t)
        else:
            dt_step = dt
        with np.errstate(over="ignore", invalid="ignore"):
            y_new = _rk4(profile, phi_init, y, dt_step)
        if not np.all(np.isfinite(y_new)):
            dt *= 0.5
            continue
        y, t = y_new, t + dt_step
        record(t, y)
        if zero and t >= c.t_max:
            return BlowupReport(NO_BLOWUP, traj, steps=step, final_dt=dt)
        if not zero and y[0] >= c.phi_max:
            state = HomogeneousState(t, float(y[0]), float(y[1]), phi_init)
            lo, hi = blowup_bracket(profile, state)
            est = min(max(t + 2.0 / y[1], lo), hi)
            return BlowupReport(BLOWUP, traj, est, (lo, hi), t, step, dt)
        if not zero and y[1] < 0 and 0.5 * y[1] ** 2 > mu_of_delta(profile, y[0] - phi_init):
            # mu(D') <= mu(D) e^{D'-D} for D' <= D, so int_{-inf}^D mu <= mu(D)
            return BlowupReport(NO_BLOWUP, traj, steps=step, final_dt=dt)
    return BlowupReport(INCONCLUSIVE, traj, steps=c.max_steps, final_dt=dt)


@dataclass
class StepChecks:
    """Worst slack of each per-step inequality (negative = violated beyond allowance)."""

    dphi_monotone: float
    lyapunov_monotone: float
    mu_dot_bound: float
    mu_exp_bound: float
    violations: int

    @property
    def passed(self):
        return self.violations == 0


def check_trajectory(traj, mu0, phi_init, rtol=1e-8):
    """Evaluate the per-step inequalities along an accepted trajectory.

    phi' nondecreasing; L = phi'^2 - lam e^{phi} nondecreasing while phi' >= 0
    (lam = 2 mu(0) e^{-phi(0)}); mu' >= phi' mu; mu >= mu(0) e^{D} for D >= 0.
    Each is tested with a relative allowance ``rtol`` on the magnitudes involved.
    """
    a = traj.arrays()
    lam = 2.0 * mu0 * np.exp(-phi_init)
    d = a["dphi"]
    delta = a["phi"] - phi_init
    slack_d = np.diff(d) + rtol * np.maximum(np.abs(d[1:]), np.abs(d[:-1]))
    grow = lam * np.exp(a["phi"])
    L = d ** 2 - grow
    scale_L = np.maximum(d ** 2, grow)
    both = (d[:-1] >= 0) & (d[1:] >= 0)
    slack_L = np.where(both, np.diff(L) + rtol * np.maximum(scale_L[1:], scale_L[:-1]), np.inf)
    slack_md = a["dmu"] - d * a["mu"] + rtol * np.abs(d * a["mu"])
    slack_md = np.where(d >= 0, slack_md, np.inf)
    base = mu0 * np.exp(delta)
    slack_me = np.where(delta >= 0, a["mu"] - base + rtol * base, np.inf)

    def worst(x):
        return float(np.min(x)) if x.size else np.inf

    bad = int(np.sum(slack_d < 0) + np.sum(slack_L < 0) + np.sum(slack_md < 0) + np.sum(slack_me < 0))
    return StepChecks(worst(slack_d), worst(slack_L), worst(slack_md), worst(slack_me), bad)


@dataclass
class BoundReport:
    R: float
    mu0: float
    phi0: float
    dphi0: float
    hyp_radius: bool
    hyp_speed: bool
    lam: float
    t_bound: float
    run: BlowupReport
    checks: StepChecks
    bound_holds: Optional[bool]

    @property
    def applicable(self):
        return self.hyp_radius and self.hyp_speed

    def summary(self):
        lines = [
            f"R = {self.R!r}, mu(0) = {self.mu0!r}, phi(0) = {self.phi0!r}, phi'(0) = {self.dphi0!r}",
            f"hypothesis R^2 mu(0) >= 2: {self.hyp_radius}",
            f"hypothesis phi'(0) >= sqrt(2 mu(0)): {self.hyp_speed}",
            f"lambda = {self.lam!r}, analytic bound t_bound = {self.t_bound!r}",
            f"status: {self.run.status}",
        ]
        if self.run.status == BLOWUP:
            lo, hi = self.run.bracket
            lines.append(f"t* = {self.run.t_star!r} in [{lo!r}, {hi!r}] (width {hi - lo:.3e})")
        if self.applicable:
            lines.append(f"t* <= min(t_bound, R): {self.bound_holds}")
        else:
            lines.append("hypotheses fail, so the bound is not asserted")
        lines.append(f"per-step inequality violations: {self.checks.violations}")
        return "\n".join(lines)


# mu(0) is only normalized to ~1e-15 relative, so instances built to sit
# exactly on a hypothesis boundary need a small allowance
HYPOTHESIS_RTOL = 1e-10


def verify_blowup_bound(R, profile, phi0, dphi0, controls=None, rtol=1e-8, strict=True):
    """Integrate and check the blow-up statement for the given instance.

    Hypotheses are R^2 mu(0) >= 2 and phi'(0) >= sqrt(2 mu(0)), each with
    relative allowance HYPOTHESIS_RTOL.  With ``strict`` a failed bound or per-step inequality raises
    PropertyViolation; the report is attached as ``exc.report``.
    """
    mu0 = mu_of_delta(profile, 0.0)
    hyp_radius = bool(R * R * mu0 >= 2.0 * (1.0 - HYPOTHESIS_RTOL))
    hyp_speed = bool(dphi0 >= np.sqrt(2.0 * mu0) * (1.0 - HYPOTHESIS_RTOL))
    lam = float(2.0 * mu0 * np.exp(-phi0))
    t_bound = float(2.0 * np.exp(-phi0 / 2.0) / np.sqrt(lam)) if lam > 0 else np.inf
    run = integrate_homogeneous(HomogeneousState.initial(phi0, dphi0), profile, controls)
    checks = check_trajectory(run.trajectory, mu0, phi0, rtol)
    bound_holds = None
    if hyp_radius and hyp_speed:
        bound_holds = run.status == BLOWUP and run.bracket[1] <= min(t_bound, R)
    report = BoundReport(R, mu0, phi0, dphi0, hyp_radius, hyp_speed, lam, t_bound, run, checks, bound_holds)
    if strict and (bound_holds is False or not checks.passed):
        exc = PropertyViolation("blow-up statement violated:\n" + report.summary())
        exc.report = report
        raise exc
    return report
