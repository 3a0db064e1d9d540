"""Semi-Lagrangian solver for the 1D system, coupled to the lattice wave solver.

Each step traces every (x, p) node back over one timestep through the
field interpolated between the two time levels, samples the old density at
the foot and multiplies by exp[2(phi_new(x) - phi_old(X))].  The field is
advanced by a predictor (source frozen at the old level) and corrected
with the source computed from the transported density.
"""
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import List, NamedTuple, Optional

import numpy as np
from numba import njit

from . import diagnostics as diag
from .errors import ConfigError, DomainExhausted, NonFiniteState, ResolutionLost, RuntimeAbort
from .field_1d import ATTRACTIVE, FieldState1D, derivatives, field_step
from .interp import interp1, interp2_density
from .phase_grid import Lattice, PhaseGrid, compute_mu

__all__ = [
    "Lattice", "PhaseGrid", "SimState", "SolverOptions", "PicardReport", "RunResult",
    "compute_mu", "initial_state", "coupled_step", "transport", "trace_feet", "run", "picard_solve",
]


@dataclass(frozen=True)
class SolverOptions:
    substeps: int = 1
    order: int = 2
    cubic: bool = True
    picard_iters: int = 1
    # values below this fraction of max f are flushed to zero after transport
    support_floor: float = 1e-12
    # abort once the rest mass drifts by more than this fraction
    max_mass_drift: float = 0.05

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ConfigError("RK order must be 2 or 4")
        if self.substeps < 1 or self.picard_iters < 0:
            raise ConfigError("substeps must be >= 1 and picard_iters >= 0")
        if not 0.0 <= self.support_floor < 1e-3:
            raise ConfigError("support_floor must lie in [0, 1e-3)")
        if not self.max_mass_drift > 0:
            raise ConfigError("max_mass_drift must be positive")


@njit(cache=True, inline="always")
def _force(x, p, theta, dto, dxo, dtn, dxn, x0, dx, cubic):
    a = interp1(dto, x0, dx, x, cubic)
    b = interp1(dtn, x0, dx, x, cubic)
    phit = (1.0 - theta) * a + theta * b
    a = interp1(dxo, x0, dx, x, cubic)
    b = interp1(dxn, x0, dx, x, cubic)
    phix = (1.0 - theta) * a + theta * b
    g = math.sqrt(1.0 + p * p)
    v = p / g
    return v, -(phit + v * phix) * p - phix / g


@njit(cache=True)
def _trace_one(x, p, dto, dxo, dtn, dxn, x0, dx, dt, substeps, order, cubic):
    # integrate from local time fraction 1 back to 0
    h = -dt / substeps
    dth = -1.0 / substeps
    th = 1.0
    for _ in range(substeps):
        if order == 2:
            k1x, k1p = _force(x, p, th, dto, dxo, dtn, dxn, x0, dx, cubic)
            k2x, k2p = _force(x + 0.5 * h * k1x, p + 0.5 * h * k1p, th + 0.5 * dth,
                              dto, dxo, dtn, dxn, x0, dx, cubic)
            x += h * k2x
            p += h * k2p
        else:
            k1x, k1p = _force(x, p, th, dto, dxo, dtn, dxn, x0, dx, cubic)
            k2x, k2p = _force(x + 0.5 * h * k1x, p + 0.5 * h * k1p, th + 0.5 * dth,
                              dto, dxo, dtn, dxn, x0, dx, cubic)
            k3x, k3p = _force(x + 0.5 * h * k2x, p + 0.5 * h * k2p, th + 0.5 * dth,
                              dto, dxo, dtn, dxn, x0, dx, cubic)
            k4x, k4p = _force(x + h * k3x, p + h * k3p, th + dth,
                              dto, dxo, dtn, dxn, x0, dx, cubic)
            x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
            p += h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        th += dth
    return x, p


@njit(cache=True)
def _transport_kernel(f_old, phi_old, dto, dxo, phi_new, dtn, dxn, x0, dx, p0, dp, dt,
                      substeps, order, cubic, i_lo, i_hi, j_lo, j_hi, out, feet_x, feet_p):
    nx, npp = f_old.shape
    for i in range(nx):
        for j in range(npp):
            out[i, j] = 0.0
            feet_x[i, j] = np.nan
            feet_p[i, j] = np.nan
    for i in range(i_lo, i_hi + 1):
        xi = x0 + i * dx
        for j in range(j_lo, j_hi + 1):
            X, P = _trace_one(xi, p0 + j * dp, dto, dxo, dtn, dxn, x0, dx, dt, substeps, order, cubic)
            feet_x[i, j] = X
            feet_p[i, j] = P
            ff = interp2_density(f_old, x0, dx, p0, dp, X, P, cubic)
            if ff > 0.0:
                out[i, j] = ff * math.exp(2.0 * (phi_new[i] - interp1(phi_old, x0, dx, X, cubic)))


class Feet(NamedTuple):
    X: np.ndarray
    P: np.ndarray


def _active_window(f, field_old, field_new, lattice, dt):
    """Index window of nodes whose feet can land near the old support."""
    box = PhaseGrid(lattice, f).support_box if np.any(f > 0) else None
    if box is None:
        return None
    (i0, i1), (j0, j1) = box
    dmax = max(np.max(np.abs(field_old.u)), np.max(np.abs(field_old.v)),
               np.max(np.abs(field_new.u)), np.max(np.abs(field_new.v)))
    pmax = max(abs(lattice.p_min), abs(lattice.p_max))
    # |dp/ds| <= 2 |D phi| (1 + |p|); |D phi| <= max(|u|, |v|)
    dp_cells = int(math.ceil(2.0 * dt * 2.0 * dmax * (1.0 + pmax) / lattice.dp))
    nx, npp = f.shape
    return (max(i0 - 3, 0), min(i1 + 3, nx - 1),
            max(j0 - 3 - dp_cells, 0), min(j1 + 3 + dp_cells, npp - 1))


def _field_arrays(state):
    dtphi, dxphi = derivatives(state)
    return np.ascontiguousarray(state.phi), np.ascontiguousarray(dtphi), np.ascontiguousarray(dxphi)


def transport(grid, field_old, field_new, options=SolverOptions(), window=None, return_feet=False):
    """Transport ``grid`` over one step between two field levels.

    ``window`` restricts the traced nodes (default: the old support grown by
    the largest possible foot displacement; all other nodes are exactly 0).
    """
    lat = grid.lattice
    dt = field_new.t - field_old.t
    f_old = np.ascontiguousarray(grid.f)
    if window is None:
        window = _active_window(f_old, field_old, field_new, lat, dt)
    out = np.zeros_like(f_old)
    feet_x = np.full_like(f_old, np.nan)
    feet_p = np.full_like(f_old, np.nan)
    if window is not None:
        phio, dto, dxo = _field_arrays(field_old)
        phin, dtn, dxn = _field_arrays(field_new)
        _transport_kernel(f_old, phio, dto, dxo, phin, dtn, dxn, lat.x_min, lat.dx, lat.p_min, lat.dp,
                          dt, options.substeps, options.order, options.cubic, *window, out, feet_x, feet_p)
    if options.support_floor > 0 and out.size:
        out[out < options.support_floor * out.max()] = 0.0
    new = PhaseGrid(lat, out)
    if return_feet:
        return new, Feet(feet_x, feet_p)
    return new


def trace_feet(grid, field_old, field_new, options=SolverOptions()):
    """Feet (X, P) at the old level for every lattice node."""
    nx, npp = grid.f.shape
    return transport(grid, field_old, field_new, options, window=(0, nx - 1, 0, npp - 1),
                     return_feet=True)[1]


@dataclass(frozen=True, eq=False)
class SimState:
    n: int
    t: float
    f: PhaseGrid
    field: FieldState1D
    monitor: diag.MonitorState
    record: diag.DiagnosticsRecord
    moments: diag.Moments
    prev_moments: Optional[diag.Moments] = None
    mass0: Optional[float] = None


def _record_for(n, t, grid, field, monitor, residual=0.0):
    dtphi, dxphi = derivatives(field)
    return diag.make_record(n, t, grid, field.phi, dtphi, dxphi, field.sign, monitor, residual)


def initial_state(lattice, density, data, sign=ATTRACTIVE):
    """Sample the initial density and build the t = 0 field from Cauchy data."""
    grid = PhaseGrid.sample(lattice, density) if callable(density) else PhaseGrid(lattice, density)
    field = FieldState1D.from_data(data, lattice.x_min, lattice.dx, lattice.nx + 1, sign)
    if grid.support_margin() < 2:
        raise ConfigError("initial density must have a margin of at least 2 cells inside the lattice")
    monitor = diag.support_monitor(grid, field.phi)
    dtphi, dxphi = derivatives(field)
    moments = diag.energy_moments(grid, dtphi, dxphi, sign)
    record = _record_for(0, 0.0, grid, field, monitor)
    return SimState(0, 0.0, grid, field, monitor, record, moments, mass0=record.rest_mass)


def _check(grid, field, n, last_state):
    if not (np.all(np.isfinite(grid.f)) and np.all(np.isfinite(field.phi))
            and np.all(np.isfinite(field.u)) and np.all(np.isfinite(field.v))):
        raise NonFiniteState(f"non-finite values after step {n}", last_state)
    if grid.support_margin() < 2:
        raise DomainExhausted(f"domain exhausted: support of f within 2 cells of the lattice edge at step {n}",
                              last_state)


def coupled_step(state, picard_iters=None, options=SolverOptions(), return_feet=False):
    """Advance the coupled system by one magic timestep.

    Predictor: field advanced with the source frozen at the old level, then
    transport.  Each of the ``picard_iters`` corrector passes recomputes the
    new source from the transported density, redoes the field step and the
    transport.
    """
    if picard_iters is None:
        picard_iters = options.picard_iters
    dt = state.field.dx
    mu_now = compute_mu(state.f)
    try:
        field_new = field_step(state.field, mu_now, mu_now, dt)
        f_new, feet = transport(state.f, state.field, field_new, options, return_feet=True)
        for _ in range(picard_iters):
            field_new = field_step(state.field, mu_now, compute_mu(f_new), dt)
            f_new, feet = transport(state.f, state.field, field_new, options, return_feet=True)
    except RuntimeAbort as exc:
        exc.last_state = state
        raise
    n = state.n + 1
    _check(f_new, field_new, n, state)
    monitor = diag.support_monitor(f_new, field_new.phi, state.monitor)
    dtphi, dxphi = derivatives(field_new)
    moments = diag.energy_moments(f_new, dtphi, dxphi, field_new.sign)
    lat = f_new.lattice
    res = diag.local_conservation_residual(state.moments.energy_density, state.moments.momentum_density,
                                           moments.energy_density, moments.momentum_density,
                                           None, None, dt, lat.dx)
    record = _record_for(n, field_new.t, f_new, field_new, monitor, float(np.max(np.abs(res), initial=0.0)))
    new = SimState(n, field_new.t, f_new, field_new, monitor, record, moments, state.moments, state.mass0)
    m0 = state.mass0
    if m0 and abs(record.rest_mass - m0) > options.max_mass_drift * m0:
        raise ResolutionLost(
            f"rest mass drifted by {abs(record.rest_mass - m0) / m0:.3g} (relative) at step {n}, t = {new.t:.6g}; "
            "the lattice no longer resolves the solution (possible finite-time blow-up)", state)
    if return_feet:
        return new, feet
    return new


@dataclass
class RunResult:
    records: List[diag.DiagnosticsRecord]
    snapshots: List[SimState]
    final: SimState


def _recentre(records, moments_window, dt, dx):
    # replace the one-sided residual of the middle level by the centred one
    (m_prev, m_now, m_next) = moments_window
    res = diag.local_conservation_residual(m_prev.energy_density, m_prev.momentum_density,
                                           m_now.energy_density, m_now.momentum_density,
                                           m_next.energy_density, m_next.momentum_density, dt, dx)
    records[-2].energy_residual_sup = float(np.max(np.abs(res), initial=0.0))


def run(config, on_step=None):
    """Evolve from the configured data to ``t_final``.

    ``config`` provides ``lattice()``, ``density()``, ``wave_data()``,
    ``sign``, ``t_final``, ``snapshot_every`` and ``solver_options()``.
    On a step failure the raised RuntimeAbort carries the last valid state
    and the records so far.
    """
    lattice = config.lattice()
    state = initial_state(lattice, config.density(), config.wave_data(), config.sign)
    check_lightcone(state.f, config.t_final)
    options = config.solver_options()
    dt = lattice.dx
    n_steps = int(math.floor(config.t_final / dt + 1e-9))
    records = [state.record]
    snapshots = [state] if config.snapshot_every else []
    first = True
    for _ in range(n_steps):
        try:
            new = coupled_step(state, options=options)
        except RuntimeAbort as exc:
            exc.records = records
            exc.last_state = state
            raise
        if first:
            # level 0 only has the forward difference
            res = diag.local_conservation_residual(None, None, state.moments.energy_density,
                                                   state.moments.momentum_density, new.moments.energy_density,
                                                   new.moments.momentum_density, dt, lattice.dx)
            records[0].energy_residual_sup = float(np.max(np.abs(res), initial=0.0))
            first = False
        else:
            _recentre(records, (state.prev_moments, state.moments, new.moments), dt, lattice.dx)
        records.append(new.record)
        state = new
        if on_step is not None:
            on_step(state)
        if config.snapshot_every and state.n % config.snapshot_every == 0:
            snapshots.append(state)
    return RunResult(records, snapshots, state)


def check_lightcone(grid, t_final):
    """Setup check: the x-support grown at unit speed must stay 2 cells inside."""
    box = grid.support_box
    if box is None:
        return
    lat = grid.lattice
    (i0, i1), _ = box
    reach = int(math.ceil(t_final / lat.dx))
    if i0 - reach < 2 or i1 + reach > lat.nx - 2:
        raise ConfigError(
            f"x-domain too small: the support can travel {t_final} in x by t_final, "
            f"but only {min(i0, lat.nx - i1) * lat.dx:.4g} of margin is available")


@dataclass
class PicardReport:
    """Successive sup-differences of the Picard iterates on [0, T]."""

    delta_f: List[float] = dc_field(default_factory=list)
    delta_phi: List[float] = dc_field(default_factory=list)
    delta_dphi: List[float] = dc_field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    diverged: bool = False
    f_levels: list = dc_field(default_factory=list, repr=False)
    field_levels: list = dc_field(default_factory=list, repr=False)

    @property
    def deltas(self):
        return [a + b + c for a, b, c in zip(self.delta_f, self.delta_phi, self.delta_dphi)]

    def ratios(self):
        d = self.deltas
        return [d[k + 1] / d[k] for k in range(len(d) - 1) if d[k] > 0]


def _dphi_gap(a, b):
    ta, xa = derivatives(a)
    tb, xb = derivatives(b)
    return max(float(np.max(np.abs(ta - tb))), float(np.max(np.abs(xa - xb))))


def _static_level(data, lattice, t, sign):
    x = lattice.x
    dphi0 = data.dphi0(x)
    return FieldState1D(lattice.x_min, lattice.dx, t, data.phi0(x), dphi0.copy(), -dphi0, sign, data)


def picard_solve(lattice, density, data, T, tol=1e-12, max_iter=50, sign=ATTRACTIVE,
                 options=SolverOptions()):
    """Picard iteration for the coupled system on [0, T].

    Iterate k transports f through the field of iterate k-1 (f^(0) = f_in,
    phi^(0) = phi_0 frozen in time) and then solves the wave equation with
    the source of its own density.  Stops when the summed sup-differences
    drop to ``tol``; growth for three consecutive iterates is reported as
    divergence.
    """
    state0 = initial_state(lattice, density, data, sign)
    dt = lattice.dx
    n_steps = int(math.floor(T / dt + 1e-9))
    f_in = state0.f
    f_prev = [f_in] * (n_steps + 1)
    field_prev = [_static_level(data, lattice, k * dt, sign) for k in range(n_steps + 1)]
    report = PicardReport()
    growth = 0
    for it in range(1, max_iter + 1):
        f_levels = [f_in]
        for k in range(n_steps):
            f_levels.append(transport(f_levels[-1], field_prev[k], field_prev[k + 1], options))
        mus = [compute_mu(g) for g in f_levels]
        field_levels = [state0.field]
        for k in range(n_steps):
            field_levels.append(field_step(field_levels[-1], mus[k], mus[k + 1], dt))
        df = max(float(np.max(np.abs(a.f - b.f))) for a, b in zip(f_levels, f_prev))
        dphi = max(float(np.max(np.abs(a.phi - b.phi))) for a, b in zip(field_levels, field_prev))
        ddphi = max(_dphi_gap(a, b) for a, b in zip(field_levels, field_prev))
        report.delta_f.append(df)
        report.delta_phi.append(dphi)
        report.delta_dphi.append(ddphi)
        report.iterations = it
        f_prev, field_prev = f_levels, field_levels
        d = report.deltas
        if len(d) >= 2 and d[-1] > d[-2]:
            growth += 1
        else:
            growth = 0
        if d[-1] <= tol:
            report.converged = True
            break
        if growth >= 3:
            report.diverged = True
            break
    report.f_levels = f_prev
    report.field_levels = field_prev
    return report
