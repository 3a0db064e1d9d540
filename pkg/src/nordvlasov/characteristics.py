"""Characteristic flow of the Vlasov equation.

Positions and momenta are arrays whose last axis is the spatial dimension
N (1 or 3), so a single call traces any number of phase-space nodes.
Along a characteristic ``e^{-(1+N) phi} f`` is constant, which gives the
multiplicative update used by the semi-Lagrangian solver.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import InputError, WindowError
from .interp import interp_lattice

# explicit RK tableaus: (a, b, c)
_TABLEAUS = {
    2: (((0.0,), (0.5,)), (0.0, 1.0), (0.0, 0.5)),  # midpoint
    4: (((0.0,), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)),
        (1 / 6, 1 / 3, 1 / 3, 1 / 6), (0.0, 0.5, 0.5, 1.0)),
}


@dataclass(frozen=True)
class CharPoint:
    """Phase-space point(s); ``x`` and ``p`` have shape (..., N)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if x.shape != p.shape:
            raise InputError(f"x shape {x.shape} != p shape {p.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise InputError("non-finite phase-space point")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def dim(self):
        return self.x.shape[-1]

    @classmethod
    def line(cls, x, p):
        """Build 1D points from flat arrays of positions and momenta."""
        return cls(np.asarray(x, dtype=float)[..., None], np.asarray(p, dtype=float)[..., None])


class FieldSampler:
    """Evaluates (phi, dt_phi, grad_phi) at (t, x) inside a space-time window.

    ``window`` is ``(t_lo, t_hi, x_lo, x_hi)``; ``x_lo``/``x_hi`` are
    per-dimension bounds or ``None`` for an unbounded direction.
    """

    dim = 1
    window = (-np.inf, np.inf, None, None)

    def sample(self, t, x):
        raise NotImplementedError

    def check(self, t_lo, t_hi, x_lo=None, x_hi=None):
        w_tlo, w_thi, w_xlo, w_xhi = self.window
        if t_lo < w_tlo - 1e-12 or t_hi > w_thi + 1e-12:
            raise WindowError(f"time range [{t_lo}, {t_hi}] outside window [{w_tlo}, {w_thi}]")
        if x_lo is not None and w_xlo is not None and np.any(np.asarray(x_lo) < np.asarray(w_xlo)):
            raise WindowError(f"positions below window bound {w_xlo}")
        if x_hi is not None and w_xhi is not None and np.any(np.asarray(x_hi) > np.asarray(w_xhi)):
            raise WindowError(f"positions above window bound {w_xhi}")


class AnalyticField(FieldSampler):
    """Field given by closed-form callables of (t, x) with x of shape (..., N)."""

    def __init__(self, phi, dtphi, grad, dim=1, window=None):
        self.phi = phi
        self.dtphi = dtphi
        self.grad = grad
        self.dim = dim
        if window is not None:
            self.window = window

    def sample(self, t, x):
        return self.phi(t, x), self.dtphi(t, x), self.grad(t, x)


def static_field_1d(phi, dphi):
    """Time-independent 1D field from phi(x) and phi'(x) acting on scalars."""
    return AnalyticField(
        lambda t, x: phi(x[..., 0]),
        lambda t, x: np.zeros(x.shape[:-1]),
        lambda t, x: dphi(x[..., 0])[..., None],
    )


class GridField1D(FieldSampler):
    """Solver field between two stored time levels.

    Linear in time, Lagrange interpolation of the given ``order`` (1 or 3)
    in x.  Each level is a triple of lattice arrays (phi, dt_phi, dx_phi).
    """

    def __init__(self, x_min, dx, t0, t1, level0, level1, order=3):
        self.x_min = float(x_min)
        self.dx = float(dx)
        self.t0, self.t1 = float(t0), float(t1)
        self.level0 = tuple(np.asarray(a, dtype=float) for a in level0)
        self.level1 = tuple(np.asarray(a, dtype=float) for a in level1)
        self.order = order
        n = self.level0[0].shape[0]
        self.window = (self.t0, self.t1, np.array([self.x_min]),
                       np.array([self.x_min + (n - 1) * self.dx]))

    def _lerp(self, k, t, x):
        theta = 0.0 if self.t1 == self.t0 else (t - self.t0) / (self.t1 - self.t0)
        a = interp_lattice(self.level0[k], self.x_min, self.dx, x, self.order)
        b = interp_lattice(self.level1[k], self.x_min, self.dx, x, self.order)
        return (1.0 - theta) * a + theta * b

    def sample(self, t, x):
        xs = x[..., 0]
        return self._lerp(0, t, xs), self._lerp(1, t, xs), self._lerp(2, t, xs)[..., None]


def char_rhs(point, dtphi, grad):
    """Right-hand side of the characteristic system.

    Returns ``(dx/ds, dp/ds) = (phat, -(dt_phi + phat.grad) p - grad/gamma)``
    with ``gamma = sqrt(1 + p^2)``, ``phat = p/gamma``.
    """
    dtphi = np.asarray(dtphi, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if not (np.all(np.isfinite(dtphi)) and np.all(np.isfinite(grad))):
        raise InputError("non-finite field sample")
    return _rhs(point.p, dtphi, grad)


def _rhs(p, dtphi, grad):
    gamma = np.sqrt(1.0 + np.sum(p * p, axis=-1))
    phat = p / gamma[..., None]
    sphi = dtphi + np.sum(phat * grad, axis=-1)
    return phat, -sphi[..., None] * p - grad / gamma[..., None]


def trace(t_from, t_to, point, sampler, substeps, order=4, return_path=False):
    """Integrate characteristics from time ``t_from`` to ``t_to``.

    Fixed-step explicit Runge-Kutta of order 2 (midpoint) or 4.  The
    sampler window must cover the time interval and every position
    reachable at speed < 1.
    """
    if order not in _TABLEAUS:
        raise ValueError(f"unsupported RK order {order}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    reach = abs(t_to - t_from)
    sampler.check(min(t_from, t_to), max(t_from, t_to),
                  point.x.min(axis=tuple(range(point.x.ndim - 1))) - reach,
                  point.x.max(axis=tuple(range(point.x.ndim - 1))) + reach)
    a_tab, b_tab, c_tab = _TABLEAUS[order]
    h = (t_to - t_from) / substeps
    x, p = point.x.copy(), point.p.copy()
    path = [(t_from, x.copy(), p.copy())] if return_path else None
    for k in range(substeps):
        s = t_from + k * h
        kx, kp = [], []
        for stage, (row, c) in enumerate(zip(a_tab, c_tab)):
            xs, ps = x, p
            for j, a in enumerate(row[:stage]):
                if a:
                    xs = xs + h * a * kx[j]
                    ps = ps + h * a * kp[j]
            _, dtphi, grad = sampler.sample(s + c * h, xs)
            dx_, dp_ = _rhs(ps, dtphi, grad)
            kx.append(dx_)
            kp.append(dp_)
        x = x + h * sum(b * v for b, v in zip(b_tab, kx))
        p = p + h * sum(b * v for b, v in zip(b_tab, kp))
        if return_path:
            path.append((s + h, x.copy(), p.copy()))
    end = CharPoint(x, p)
    if return_path:
        return end, path
    return end


def trace_backward(t_end, t_start, point, sampler, substeps, order=4):
    """Return (X, P)(t_start) for characteristics through ``point`` at ``t_end``."""
    if t_start > t_end:
        raise ValueError("t_start must not exceed t_end")
    return trace(t_end, t_start, point, sampler, substeps, order)


def transport_factor(phi_end, phi_start, dim):
    """``exp[(1+N)(phi_end - phi_start)]``: growth of f along one characteristic."""
    phi_end = np.asarray(phi_end, dtype=float)
    phi_start = np.asarray(phi_start, dtype=float)
    if not (np.all(np.isfinite(phi_end)) and np.all(np.isfinite(phi_start))):
        raise InputError("non-finite field value")
    return np.exp((1 + dim) * (phi_end - phi_start))


class JacobianCheck(NamedTuple):
    numeric: float
    analytic: float
    cond: float


class IllConditioned(InputError):
    pass


def jacobian_det(t, point, sampler, fd_step, substeps=200, order=4, max_cond=1e12):
    """Determinant of d(X,P)(0)/d(x,p) at a single point.

    The numeric value differentiates the traced map by central differences;
    the analytic value is ``exp[N(phi(t,x) - phi(0, X(0)))]``.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(point.x, dtype=float).reshape(-1)
    p = np.asarray(point.p, dtype=float).reshape(-1)
    n = x.size
    z = np.concatenate([x, p])
    # all 4N perturbed starts traced in one batch
    starts = np.repeat(z[None, :], 4 * n, axis=0)
    for k in range(2 * n):
        starts[2 * k, k] += fd_step
        starts[2 * k + 1, k] -= fd_step
    batch = np.vstack([z[None, :], starts])
    feet = trace(t, 0.0, CharPoint(batch[:, :n], batch[:, n:]), sampler, substeps, order)
    ends = np.concatenate([feet.x, feet.p], axis=1)
    jac = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        jac[:, k] = (ends[1 + 2 * k] - ends[2 + 2 * k]) / (2 * fd_step)
    cond = float(np.linalg.cond(jac))
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditioned(f"finite-difference Jacobian ill-conditioned (cond ~ {cond:.3e})")
    phi_t = sampler.sample(t, x[None, :])[0]
    phi_0 = sampler.sample(0.0, feet.x[:1])[0]
    analytic = float(np.exp(n * (np.ravel(phi_t)[0] - np.ravel(phi_0)[0])))
    return JacobianCheck(float(np.linalg.det(jac)), analytic, cond)
