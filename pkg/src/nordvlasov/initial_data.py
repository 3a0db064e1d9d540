"""Initial-data families for the 1D solver and the homogeneous blow-up run."""
import numpy as np
from scipy.special import erf

from .errors import ConfigError
from .field_1d import WaveData


def _taper(r2):
    # (1 - r^2)^3 on r < 1: C^2 cutoff that makes supports exactly compact
    w = np.clip(1.0 - r2, 0.0, None)
    return w * w * w


def gaussian_density(x0=0.0, p0=0.0, sigma_x=0.5, sigma_p=0.5, amplitude=1.0, cutoff=3.0):
    """Gaussian bump in (x, p) multiplied by a C^2 taper at radius ``cutoff`` (in sigmas)."""
    if sigma_x <= 0 or sigma_p <= 0 or cutoff <= 0:
        raise ConfigError("gaussian widths and cutoff must be positive")
    if amplitude < 0:
        raise ConfigError("amplitude must be non-negative")

    def f(x, p):
        r2 = ((x - x0) / sigma_x) ** 2 + ((p - p0) / sigma_p) ** 2
        return amplitude * np.exp(-0.5 * r2) * _taper(r2 / cutoff ** 2)

    f.support = (x0 - cutoff * sigma_x, x0 + cutoff * sigma_x,
                 p0 - cutoff * sigma_p, p0 + cutoff * sigma_p)
    return f


def _smooth_box_1d(s, half, edge):
    # 1 on |s| <= half, quintic smoothstep (C^2) down to 0 over one edge width
    r = np.clip((np.abs(s) - half) / edge, 0.0, 1.0)
    return 1.0 - r ** 3 * (10.0 - 15.0 * r + 6.0 * r * r)


def box_density(x0=0.0, p0=0.0, half_x=1.0, half_p=0.5, amplitude=1.0, edge=0.25):
    """Plateau of height ``amplitude`` with C^2 edges of width ``edge``."""
    if half_x <= 0 or half_p <= 0 or edge <= 0:
        raise ConfigError("box half-widths and edge must be positive")
    if amplitude < 0:
        raise ConfigError("amplitude must be non-negative")

    def f(x, p):
        return amplitude * _smooth_box_1d(x - x0, half_x, edge) * _smooth_box_1d(p - p0, half_p, edge)

    f.support = (x0 - half_x - edge, x0 + half_x + edge, p0 - half_p - edge, p0 + half_p + edge)
    return f


def zero_density():
    def f(x, p):
        return np.zeros(np.broadcast(x, p).shape)

    f.support = None
    return f


DENSITY_FAMILIES = {"gaussian": gaussian_density, "box": box_density, "zero": zero_density}


def make_density(family, **params):
    try:
        factory = DENSITY_FAMILIES[family]
    except KeyError:
        raise ConfigError(f"unknown f_in family {family!r}; choose from {sorted(DENSITY_FAMILIES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"f_in family {family!r}: {exc}") from None


class ScalarProfile:
    """A 1D profile g with derivative and antiderivative, all vectorized."""

    def __init__(self, value, deriv, antideriv):
        self.value = value
        self.deriv = deriv
        self.antideriv = antideriv


def zero_profile():
    z = lambda x: np.zeros(np.shape(x))
    return ScalarProfile(z, z, z)


def sine_profile(k=1.0, amplitude=1.0, phase=0.0):
    if k == 0:
        raise ConfigError("sine wavenumber must be nonzero")
    return ScalarProfile(
        lambda x: amplitude * np.sin(k * np.asarray(x) + phase),
        lambda x: amplitude * k * np.cos(k * np.asarray(x) + phase),
        lambda x: -amplitude / k * np.cos(k * np.asarray(x) + phase),
    )


def gaussian_profile(amplitude=1.0, center=0.0, width=1.0):
    if width <= 0:
        raise ConfigError("gaussian width must be positive")
    c = amplitude * width * np.sqrt(np.pi / 2)
    return ScalarProfile(
        lambda x: amplitude * np.exp(-0.5 * ((np.asarray(x) - center) / width) ** 2),
        lambda x: -amplitude * (np.asarray(x) - center) / width ** 2
        * np.exp(-0.5 * ((np.asarray(x) - center) / width) ** 2),
        lambda x: c * erf((np.asarray(x) - center) / (np.sqrt(2) * width)),
    )


def constant_profile(value=0.0):
    return ScalarProfile(
        lambda x: np.full(np.shape(x), float(value)),
        lambda x: np.zeros(np.shape(x)),
        lambda x: float(value) * np.asarray(x, dtype=float),
    )


PROFILE_FAMILIES = {"zero": zero_profile, "sine": sine_profile,
                    "gaussian": gaussian_profile, "constant": constant_profile}


def make_profile(family, **params):
    try:
        factory = PROFILE_FAMILIES[family]
    except KeyError:
        raise ConfigError(f"unknown field family {family!r}; choose from {sorted(PROFILE_FAMILIES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"field family {family!r}: {exc}") from None


def wave_data(phi0, phi1):
    """Combine two ScalarProfiles into Cauchy data for the wave equation."""
    return WaveData(phi0.value, phi0.deriv, phi1.value, phi1.antideriv)


# radial momentum profiles for the homogeneous 3D problem, shape only;
# the amplitude is fixed later by normalizing mu(0)
def radial_bump(q, radius):
    return _taper((np.asarray(q) / radius) ** 2)


def radial_gaussian(q, radius):
    q = np.asarray(q)
    return np.exp(-4.5 * (q / radius) ** 2) * _taper((q / radius) ** 2)


RADIAL_FAMILIES = {"bump": radial_bump, "gaussian": radial_gaussian}
