"""Conserved and monitored quantities of the 1D system.

All quadratures are trapezoidal, in p and then in x.
"""
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

from .field_1d import sign_factor
from .interp import interp1_many
from .phase_grid import compute_mu


@dataclass
class DiagnosticsRecord:
    """Scalars reported for one time level.

    ``energy_residual_sup`` is the sup of the discrete local energy balance
    dt e + dx p.  In a run it is time-centred on the record's level; the
    first and last levels fall back to one-sided time differences.
    """

    step: int
    t: float
    total_energy: float
    field_energy: float
    kinetic_energy: float
    rest_mass: float
    P_sup: float
    Q_sup: float
    Lambda: float
    f_sup: float
    mu_sup: float
    energy_residual_sup: float
    mu_bound_slack: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)


class Moments(NamedTuple):
    energy_density: np.ndarray
    momentum_density: np.ndarray
    kinetic: float
    field: float
    total: float


def energy_moments(grid, dtphi, dxphi, sign="attractive"):
    """Energy density e, momentum density and their x-integrals.

    For the attractive sign e = int sqrt(1+p^2) f dp + (phi_t^2 + phi_x^2)/2
    and the momentum density is int p f dp - phi_t phi_x.  The repulsive
    sign flips both field terms.
    """
    p = grid.lattice.p
    dp, dx = grid.lattice.dp, grid.lattice.dx
    s = sign_factor(sign)
    kin = np.trapezoid(grid.f * np.sqrt(1.0 + p ** 2)[None, :], dx=dp, axis=1)
    mom = np.trapezoid(grid.f * p[None, :], dx=dp, axis=1)
    field = 0.5 * (dtphi ** 2 + dxphi ** 2)
    e = kin - s * field
    momentum = mom + s * dtphi * dxphi
    kinetic_total = float(np.trapezoid(kin, dx=dx))
    field_total = float(np.trapezoid(field, dx=dx))
    return Moments(e, momentum, kinetic_total, field_total, kinetic_total - s * field_total)


def rest_mass(grid, phi):
    """Double trapezoid of f e^{-phi}."""
    inner = np.trapezoid(grid.f, dx=grid.lattice.dp, axis=1)
    return float(np.trapezoid(inner * np.exp(-np.asarray(phi)), dx=grid.lattice.dx))


class MonitorState(NamedTuple):
    P: float
    Q: float

    @property
    def Lambda(self):
        return self.P + self.Q


def support_monitor(grid, phi, history=None):
    """Running maxima of |p| and |phi| over the nonzero cells of f.

    With an empty support the history is returned unchanged (zero when there
    is no history yet).
    """
    P = Q = 0.0
    if history is not None:
        P, Q = history.P, history.Q
    mask = grid.f > 0
    if mask.any():
        p = grid.lattice.p
        P = max(P, float(np.max(np.abs(p[np.any(mask, axis=0)]))))
        Q = max(Q, float(np.max(np.abs(np.asarray(phi)[np.any(mask, axis=1)]))))
    return MonitorState(P, Q)


def local_conservation_residual(e_prev, mom_prev, e_now, mom_now, e_next, mom_next, dt, dx):
    """Centred residual (e^{n+1} - e^{n-1})/(2 dt) + (m_{i+1} - m_{i-1})/(2 dx) at level n.

    Any of the outer levels may be None, in which case the time derivative
    is one-sided and the flux is averaged over the two available levels.
    Returned on interior nodes.
    """
    def flux_div(m):
        return (m[2:] - m[:-2]) / (2 * dx)

    if e_prev is not None and e_next is not None:
        return (e_next[1:-1] - e_prev[1:-1]) / (2 * dt) + flux_div(mom_now)
    if e_next is not None:
        return (e_next[1:-1] - e_now[1:-1]) / dt + 0.5 * (flux_div(mom_now) + flux_div(mom_next))
    if e_prev is not None:
        return (e_now[1:-1] - e_prev[1:-1]) / dt + 0.5 * (flux_div(mom_now) + flux_div(mom_prev))
    return np.zeros(max(len(e_now) - 2, 0))


def mu_bound(grid, P_sup):
    """2 |f|_inf asinh(P): the sup bound on mu for support inside |p| <= P."""
    return 2.0 * float(grid.f.max(initial=0.0)) * float(np.arcsinh(P_sup))


def mu_quadrature_allowance(grid):
    """Slack for the discrete bound: the node sum over |p| <= P can exceed
    the integral by at most two cells' worth of |f|_inf (integrand <= 1)."""
    return 2.0 * grid.lattice.dp * float(grid.f.max(initial=0.0))


def make_record(step, t, grid, phi, dtphi, dxphi, sign, monitor, residual_sup=0.0):
    moments = energy_moments(grid, dtphi, dxphi, sign)
    mu = compute_mu(grid)
    mu_sup = float(np.max(mu, initial=0.0))
    return DiagnosticsRecord(
        step=step, t=t,
        total_energy=moments.total,
        field_energy=moments.field,
        kinetic_energy=moments.kinetic,
        rest_mass=rest_mass(grid, phi),
        P_sup=monitor.P, Q_sup=monitor.Q, Lambda=monitor.P + monitor.Q,
        f_sup=float(grid.f.max(initial=0.0)),
        mu_sup=mu_sup,
        energy_residual_sup=residual_sup,
        mu_bound_slack=mu_bound(grid, monitor.P) - mu_sup,
    )


def to_physical(grid, phi, dim=1):
    """Convert the rescaled density back to the physical frames.

    Returns ``(frak_f, f_ph)`` where ``frak_f = e^{-(1+N) phi} f`` on the
    lattice and ``f_ph(p)`` evaluates ``frak_f(x_i, e^{phi(x_i)} p)`` for
    every lattice column x_i (cubic interpolation in p, zero outside).
    """
    phi = np.asarray(phi, dtype=float)
    frak = grid.f * np.exp(-(1 + dim) * phi)[:, None]
    lat = grid.lattice

    def f_ph(p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.empty((frak.shape[0], p.size))
        for i in range(frak.shape[0]):
            pq = np.exp(phi[i]) * p
            vals = interp1_many(np.ascontiguousarray(frak[i]), lat.p_min, lat.dp, pq, True)
            inside = (pq >= lat.p_min) & (pq <= lat.p_max)
            out[i] = np.where(inside, vals, 0.0)
        return out

    return frak, f_ph
