"""Lattice interpolation kernels shared by the tracer and the 1D solver.

Cubic interpolation is 4-point Lagrange on a uniform lattice; near the
lattice ends the stencil is clamped inward (one-sided).  All kernels are
numba-compiled and callable from Python with numpy arrays.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _cubic_weights(a):
    # Lagrange basis on nodes -1, 0, 1, 2 evaluated at a
    w0 = -a * (a - 1.0) * (a - 2.0) / 6.0
    w1 = (a + 1.0) * (a - 1.0) * (a - 2.0) / 2.0
    w2 = -(a + 1.0) * a * (a - 2.0) / 2.0
    w3 = (a + 1.0) * a * (a - 1.0) / 6.0
    return w0, w1, w2, w3


@njit(cache=True)
def interp1(arr, x0, dx, xq, cubic):
    """Interpolate ``arr`` (nodes ``x0 + i*dx``) at scalar ``xq``."""
    n = arr.shape[0]
    s = (xq - x0) / dx
    if cubic and n >= 4:
        k = int(np.floor(s))
        if k < 1:
            k = 1
        elif k > n - 3:
            k = n - 3
        a = s - k
        w0, w1, w2, w3 = _cubic_weights(a)
        return w0 * arr[k - 1] + w1 * arr[k] + w2 * arr[k + 1] + w3 * arr[k + 2]
    k = int(np.floor(s))
    if k < 0:
        k = 0
    elif k > n - 2:
        k = n - 2
    a = s - k
    return (1.0 - a) * arr[k] + a * arr[k + 1]


@njit(cache=True)
def interp2_density(f, x0, dx, p0, dp, xq, pq, cubic):
    """Interpolate a phase-space density at (xq, pq), clipped at zero.

    Outside the lattice the density is zero.
    """
    nx, npp = f.shape
    sx = (xq - x0) / dx
    sp = (pq - p0) / dp
    if sx < 0.0 or sx > nx - 1 or sp < 0.0 or sp > npp - 1:
        return 0.0
    if cubic and nx >= 4 and npp >= 4:
        kx = int(np.floor(sx))
        if kx < 1:
            kx = 1
        elif kx > nx - 3:
            kx = nx - 3
        kp = int(np.floor(sp))
        if kp < 1:
            kp = 1
        elif kp > npp - 3:
            kp = npp - 3
        wx = _cubic_weights(sx - kx)
        wp = _cubic_weights(sp - kp)
        val = 0.0
        for a in range(4):
            row = 0.0
            for b in range(4):
                row += wp[b] * f[kx - 1 + a, kp - 1 + b]
            val += wx[a] * row
    else:
        kx = min(int(np.floor(sx)), nx - 2)
        kp = min(int(np.floor(sp)), npp - 2)
        ax = sx - kx
        ap = sp - kp
        val = ((1.0 - ax) * ((1.0 - ap) * f[kx, kp] + ap * f[kx, kp + 1])
               + ax * ((1.0 - ap) * f[kx + 1, kp] + ap * f[kx + 1, kp + 1]))
    if val < 0.0:
        return 0.0
    return val


@njit(cache=True)
def interp1_many(arr, x0, dx, xq, cubic):
    out = np.empty(xq.shape[0])
    for k in range(xq.shape[0]):
        out[k] = interp1(arr, x0, dx, xq[k], cubic)
    return out


@njit(cache=True)
def interp2_density_many(f, x0, dx, p0, dp, xq, pq, cubic):
    out = np.empty(xq.shape[0])
    for k in range(xq.shape[0]):
        out[k] = interp2_density(f, x0, dx, p0, dp, xq[k], pq[k], cubic)
    return out


def interp_lattice(arr, x0, dx, xq, order=3):
    """Vectorized 1D lattice interpolation for arbitrary-shaped ``xq``."""
    xq = np.asarray(xq, dtype=float)
    flat = interp1_many(np.ascontiguousarray(arr, dtype=float), float(x0), float(dx),
                        np.ascontiguousarray(xq.ravel()), order == 3)
    return flat.reshape(xq.shape)
