"""Rectangular (x, p) lattice and the density living on it."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class Lattice:
    """Nodes x_min + i*dx (i = 0..nx) and p_min + j*dp (j = 0..n_p)."""

    x_min: float
    x_max: float
    nx: int
    p_min: float
    p_max: float
    n_p: int

    def __post_init__(self):
        if self.nx < 8 or self.n_p < 8:
            raise ConfigError(f"lattice needs nx, np >= 8 (got {self.nx}, {self.n_p})")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise ConfigError("lattice bounds must satisfy min < max")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dp(self):
        return (self.p_max - self.p_min) / self.n_p

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.nx + 1)

    @property
    def p(self):
        return self.p_min + self.dp * np.arange(self.n_p + 1)

    @property
    def shape(self):
        return (self.nx + 1, self.n_p + 1)

    def refined(self, factor=2):
        return Lattice(self.x_min, self.x_max, self.nx * factor, self.p_min, self.p_max, self.n_p * factor)


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Density f[i, j] = f(x_i, p_j) >= 0 on a lattice."""

    lattice: Lattice
    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.shape != self.lattice.shape:
            raise InputError(f"f has shape {f.shape}, lattice expects {self.lattice.shape}")
        if np.any(f < 0):
            raise InputError("phase-space density must be non-negative")
        object.__setattr__(self, "f", f)

    @classmethod
    def sample(cls, lattice, density):
        X, P = np.meshgrid(lattice.x, lattice.p, indexing="ij")
        return cls(lattice, np.clip(density(X, P), 0.0, None))

    @cached_property
    def support_box(self):
        """Index ranges ((i_lo, i_hi), (j_lo, j_hi)) of nonzero cells, or None."""
        nz_x = np.flatnonzero(np.any(self.f > 0, axis=1))
        if nz_x.size == 0:
            return None
        nz_p = np.flatnonzero(np.any(self.f > 0, axis=0))
        return (int(nz_x[0]), int(nz_x[-1])), (int(nz_p[0]), int(nz_p[-1]))

    def support_margin(self):
        """Smallest distance (in cells) from the support box to any lattice edge."""
        box = self.support_box
        if box is None:
            return np.inf
        (i0, i1), (j0, j1) = box
        nx, npp = self.f.shape
        return min(i0, nx - 1 - i1, j0, npp - 1 - j1)


def compute_mu(grid):
    """mu(x_i) = trapezoid over p of f(x_i, p)/sqrt(1+p^2)."""
    weight = 1.0 / np.sqrt(1.0 + grid.lattice.p ** 2)
    return np.trapezoid(grid.f * weight[None, :], dx=grid.lattice.dp, axis=1)
