"""1D wave equation  phi_tt - phi_xx = sign * mu  on a magic-timestep lattice.

The state carries phi and the Riemann invariants u = phi_t + phi_x,
v = phi_t - phi_x.  With dt = dx the invariants move exactly one cell per
step, so the only approximation is the source quadrature along each
characteristic segment.  phi itself is advanced with the exact lattice
identity of the d'Alembert solution (sum over a characteristic diamond),
which keeps vacuum evolution exact to roundoff.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, DomainExhausted, InputError

ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"
_SIGN = {ATTRACTIVE: -1.0, REPULSIVE: 1.0}


def sign_factor(sign):
    try:
        return _SIGN[sign]
    except KeyError:
        raise ConfigError(f"sign must be one of {sorted(_SIGN)}, got {sign!r}") from None


@dataclass(frozen=True)
class WaveData:
    """Cauchy data (phi0, phi1) with the derivative phi0' and an antiderivative of phi1.

    All callables act elementwise on numpy arrays.  ``Phi1`` may be None, in
    which case integrals of phi1 are done by adaptive quadrature.
    """

    phi0: Callable
    dphi0: Callable
    phi1: Callable
    Phi1: Optional[Callable] = None

    def integral_phi1(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.Phi1 is not None:
            return self.Phi1(b) - self.Phi1(a)
        out = np.empty(np.broadcast(a, b).shape)
        aa, bb = np.broadcast_arrays(a, b)
        for idx in np.ndindex(out.shape):
            out[idx] = quad(lambda s: float(self.phi1(np.asarray(s))), aa[idx], bb[idx])[0]
        return out

    def u0(self, x):
        return self.phi1(x) + self.dphi0(x)

    def v0(self, x):
        return self.phi1(x) - self.dphi0(x)


def zero_wave_data():
    z = lambda x: np.zeros(np.shape(x))
    return WaveData(z, z, z, z)


def free_dalembert(data, t, x):
    """Closed-form free solution at (t, x): returns (phi, dt_phi, dx_phi)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    xp, xm = x + t, x - t
    phi = 0.5 * (data.phi0(xp) + data.phi0(xm)) + 0.5 * data.integral_phi1(xm, xp)
    u = data.u0(xp)
    v = data.v0(xm)
    return phi, 0.5 * (u + v), 0.5 * (u - v)


@dataclass(frozen=True)
class FieldState1D:
    """Field on the nodes ``x_min + i*dx``, i = 0..n-1, at time ``t``.

    ``phi_prev`` is phi one step earlier (None before the first step); the
    three-level phi update needs it.  ``data`` supplies the free inflow at
    the lattice ends.
    """

    x_min: float
    dx: float
    t: float
    phi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sign: str = ATTRACTIVE
    data: WaveData = None
    phi_prev: Optional[np.ndarray] = None
    step: int = 0
    # time of the data level; t == t0 + step*dx up to roundoff
    t0: float = 0.0

    def __post_init__(self):
        if not (self.phi.shape == self.u.shape == self.v.shape):
            raise InputError("phi, u, v must have equal lengths")
        sign_factor(self.sign)

    @property
    def n(self):
        return self.phi.shape[0]

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def x_max(self):
        return self.x_min + self.dx * (self.n - 1)

    @classmethod
    def from_data(cls, data, x_min, dx, n, sign=ATTRACTIVE, t=0.0):
        x = x_min + dx * np.arange(n)
        phi, dtphi, dxphi = free_dalembert(data, t, x)
        return cls(x_min, dx, t, phi, dtphi + dxphi, dtphi - dxphi, sign, data, t0=t)


def derivatives(state):
    """(dt_phi, dx_phi) reconstructed from the Riemann invariants."""
    return 0.5 * (state.u + state.v), 0.5 * (state.u - state.v)


def check_source_support(mu, where="source"):
    """Abort if the source comes within one cell of the lattice ends."""
    if np.any(mu[:2] != 0.0) or np.any(mu[-2:] != 0.0):
        raise DomainExhausted(f"{where} support reaches the lattice boundary; enlarge the x-domain")


def field_step(state, mu_now, mu_next, dt, check_support=True):
    """Advance the field by one magic timestep.

    u^{n+1}_i = u^n_{i+1} + s dt/2 (mu^n_{i+1} + mu^{n+1}_i)
    v^{n+1}_i = v^n_{i-1} + s dt/2 (mu^n_{i-1} + mu^{n+1}_i)
    phi^{n+1}_i = phi^n_{i+1} + phi^n_{i-1} - phi^{n-1}_i + s dt^2 mu^n_i

    with s = -1 (attractive) or +1 (repulsive).  The first step replaces
    phi^{n-1} by the closed-form free solution one step back.  Inflow at the
    ends comes from the free evolution of the initial data.
    """
    dx = state.dx
    if abs(dt - dx) > 1e-12 * dx:
        raise ConfigError(f"field_step needs dt == dx (magic timestep), got dt={dt!r}, dx={dx!r}")
    dt = dx
    mu_now = np.asarray(mu_now, dtype=float)
    mu_next = np.asarray(mu_next, dtype=float)
    if mu_now.shape != state.phi.shape or mu_next.shape != state.phi.shape:
        raise InputError("source slice length must match the lattice")
    if check_support:
        check_source_support(mu_now)
        check_source_support(mu_next)
    data = state.data if state.data is not None else zero_wave_data()
    s = sign_factor(state.sign)
    # no running sum: inflow phases must not drift over long runs
    t_new = state.t0 + (state.step + 1) * dt
    x = state.x

    u = np.empty_like(state.u)
    v = np.empty_like(state.v)
    u[:-1] = state.u[1:] + s * 0.5 * dt * (mu_now[1:] + mu_next[:-1])
    v[1:] = state.v[:-1] + s * 0.5 * dt * (mu_now[:-1] + mu_next[1:])
    u[-1] = data.u0(np.asarray(x[-1] + t_new))
    v[0] = data.v0(np.asarray(x[0] - t_new))

    # ghost values outside the lattice follow the free solution
    left = free_dalembert(data, state.t, x[0] - dx)[0]
    right = free_dalembert(data, state.t, x[-1] + dx)[0]
    phi_ext = np.concatenate([[left], state.phi, [right]])
    if state.phi_prev is None:
        # half diamond from the Cauchy surface (state must be the t=0 data
        # level): free part exact, source by its value at the base
        phi_new = free_dalembert(data, t_new, x)[0] - free_dalembert(data, state.t, x)[0] + state.phi
        phi_new = phi_new + s * 0.5 * dt * dt * mu_now
    else:
        phi_new = phi_ext[2:] + phi_ext[:-2] - state.phi_prev + s * dt * dt * mu_now
    return replace(state, t=t_new, phi=phi_new, u=u, v=v, phi_prev=state.phi, step=state.step + 1)


def field_energy_density(state):
    """(phi_t^2 + phi_x^2)/2 = (u^2 + v^2)/4 on the lattice."""
    return 0.25 * (state.u ** 2 + state.v ** 2)
