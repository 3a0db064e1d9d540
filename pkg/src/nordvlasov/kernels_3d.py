"""Lightcone-representation kernels for the first and second derivatives of phi in 3D.

Every kernel takes a unit direction ``omega`` and a momentum ``p`` as
arrays of shape (..., 3) and is vectorized over the leading axes.
Notation: gamma = sqrt(1 + p^2), phat = p/gamma, s = omega.phat.
"""
from typing import NamedTuple

import numpy as np

from .errors import InputError, PropertyViolation


class KernelInput(NamedTuple):
    omega: np.ndarray
    p: np.ndarray


def kernel_input(omega, p, tol=1e-12):
    """Validate and broadcast (omega, p); |omega| must be 1 within ``tol``."""
    omega = np.asarray(omega, dtype=float)
    p = np.asarray(p, dtype=float)
    if omega.shape[-1] != 3 or p.shape[-1] != 3:
        raise InputError("omega and p must have a trailing axis of length 3")
    omega, p = np.broadcast_arrays(omega, p)
    if np.any(np.abs(np.linalg.norm(omega, axis=-1) - 1.0) > tol):
        raise InputError("omega must be a unit vector")
    return KernelInput(omega, p)


def _common(inp):
    omega, p = inp
    p2 = np.sum(p * p, axis=-1)
    gamma = np.sqrt(1.0 + p2)
    phat = p / gamma[..., None]
    s = np.sum(omega * phat, axis=-1)
    return omega, p, p2, gamma, phat, s


class VMKernels(NamedTuple):
    aE: np.ndarray
    aE_tilde: np.ndarray
    aB: np.ndarray
    aB_tilde: np.ndarray


def vm_kernels(inp):
    """The four relativistic Vlasov-Maxwell field kernels (Glassey-Strauss)."""
    omega, p, p2, gamma, phat, s = _common(inp)
    w = omega + phat
    wedge = np.cross(omega, phat)
    d1 = (1.0 + s)[..., None]
    d2 = ((1.0 + p2) * (1.0 + s) ** 2)[..., None]
    return VMKernels(w / d2, w / d1, wedge / d2, wedge / d1)


class PhiTKernels(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


def phi_t_kernels(inp, check=True, rtol=1e-13):
    """Kernels of the dt_phi representation.

    a = -(omega+phat).phat / (gamma (1+s)^2),
    b = |omega+phat|^2 / (gamma (1+s)^2),
    c = (omega+phat) / (gamma^3 (1+s)^2).
    With ``check`` the identity a = -a^E.p is verified on the way out.
    """
    omega, p, p2, gamma, phat, s = _common(inp)
    w = omega + phat
    den = gamma * (1.0 + s) ** 2
    a = -np.sum(w * phat, axis=-1) / den
    b = np.sum(w * w, axis=-1) / den
    c = w / (gamma ** 3 * (1.0 + s) ** 2)[..., None]
    if check:
        aE = vm_kernels(inp).aE
        other = -np.sum(aE * p, axis=-1)
        scale = np.linalg.norm(aE, axis=-1) * np.sqrt(p2)
        if np.any(np.abs(a - other) > rtol * np.maximum(scale, np.abs(a)) + 1e-300):
            raise PropertyViolation("a^{phi_t} != -a^E . p beyond roundoff")
    return PhiTKernels(a, b, c)


class PhiXKernels(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray  # (..., 3, 3), row i = omega_i c^{phi_t}


def phi_x_kernels(inp):
    """Kernels of the grad_phi representation, composed from the ones above."""
    omega, p, p2, gamma, phat, s = _common(inp)
    vm = vm_kernels(inp)
    pt = phi_t_kernels(inp, check=False)
    a = gamma[..., None] * (vm.aE - np.cross(phat, vm.aB))
    b = pt.b[..., None] * omega
    c = omega[..., :, None] * pt.c[..., None, :]
    return PhiXKernels(a, b, c)


def phi_tt_kernel(inp):
    """Kernel of the most singular term of dt^2 phi, in closed form.

    Carrying out -r^3 phat.grad_y[a^{phi_t} / ((1+s) r^2)] with
    grad_y s = (phat - omega s)/r and grad_y r = omega gives, with q = |phat|^2,

        [(1 - 2s - 3q)(q - s^2) - 2s(s + q)(1 + s)] / (gamma (1+s)^4).
    """
    omega, p, p2, gamma, phat, s = _common(inp)
    q = np.sum(phat * phat, axis=-1)
    num = (1.0 - 2.0 * s - 3.0 * q) * (q - s * s) - 2.0 * s * (s + q) * (1.0 + s)
    return num / (gamma * (1.0 + s) ** 4)


def phi_tt_kernel_fd(omega, p, h):
    """Finite-difference evaluation of the defining derivative expression.

    Differentiates y -> a^{phi_t}(omega(y), p) / ((1+omega(y).phat) |y|^2)
    along phat at y = omega (so |x - y| = 1, x = 0) with central differences.
    """
    omega = np.asarray(omega, dtype=float)
    p = np.asarray(p, dtype=float)
    gamma = np.sqrt(1.0 + np.sum(p * p, axis=-1))
    phat = p / gamma[..., None]

    def g(y):
        r = np.linalg.norm(y, axis=-1)
        om = y / r[..., None]
        s = np.sum(om * phat, axis=-1)
        a = phi_t_kernels(KernelInput(om, p), check=False).a
        return a / ((1.0 + s) * r ** 2)

    deriv = np.zeros(omega.shape[:-1])
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        deriv = deriv + phat[..., j] * (g(omega + e) - g(omega - e)) / (2 * h)
    return -deriv


class InequalityCheck(NamedTuple):
    lhs1: np.ndarray
    rhs1: np.ndarray
    lhs2: np.ndarray
    rhs2: np.ndarray
    both_hold: np.ndarray


def momentum_inequalities(inp):
    """1+s >= (1+|omega x p|^2)/(2(1+p^2))  and  |omega+phat|^2 <= 2(1+s)."""
    omega, p, p2, gamma, phat, s = _common(inp)
    lhs1 = 1.0 + s
    rhs1 = (1.0 + np.sum(np.cross(omega, p) ** 2, axis=-1)) / (2.0 * (1.0 + p2))
    w = omega + phat
    lhs2 = np.sum(w * w, axis=-1)
    rhs2 = 2.0 * (1.0 + s)
    return InequalityCheck(lhs1, rhs1, lhs2, rhs2, (lhs1 >= rhs1) & (lhs2 <= rhs2))


def sphere_rule(order):
    """Product rule on the unit sphere: ``order`` Gauss-Legendre nodes in
    cos(theta) times ``2*order`` equally spaced azimuths.  Returns (omega, weights)."""
    x, w = np.polynomial.legendre.leggauss(order)
    n_az = 2 * order
    az = 2.0 * np.pi * (np.arange(n_az) + 0.5) / n_az
    ct = x[:, None]
    st = np.sqrt(1.0 - ct ** 2)
    omega = np.stack([st * np.cos(az)[None, :], st * np.sin(az)[None, :],
                      np.broadcast_to(ct, (order, n_az))], axis=-1)
    weights = np.broadcast_to(w[:, None] * (2.0 * np.pi / n_az), (order, n_az))
    return omega.reshape(-1, 3), weights.reshape(-1)


class SphereIntegral(NamedTuple):
    value: float
    error: float


def sphere_average(kernel, p, order=64):
    """Integral of ``kernel(omega, p)`` over the unit sphere.

    ``error`` is the change against the rule of half the order.
    """
    p = np.asarray(p, dtype=float)

    def integrate(n):
        omega, w = sphere_rule(n)
        vals = kernel(omega, np.broadcast_to(p, omega.shape))
        return float(np.sum(w * vals))

    value = integrate(order)
    return SphereIntegral(value, abs(value - integrate(max(order // 2, 1))))


def random_inputs(rng, n, p_max=1e3, antipodal_fraction=0.25):
    """Seeded random (omega, p) samples, log-uniform |p| in [1e-3, p_max].

    A fraction of the directions is placed within a small angle of -phat,
    where 1 + omega.phat is smallest.
    """
    omega = rng.normal(size=(n, 3))
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)
    pdir = rng.normal(size=(n, 3))
    pdir /= np.linalg.norm(pdir, axis=1, keepdims=True)
    mag = np.exp(rng.uniform(np.log(1e-3), np.log(p_max), size=n))
    p = pdir * mag[:, None]
    k = int(antipodal_fraction * n)
    if k:
        tilt = rng.normal(size=(k, 3)) * np.exp(rng.uniform(np.log(1e-8), np.log(1e-1), size=k))[:, None]
        near = -pdir[:k] + tilt
        omega[:k] = near / np.linalg.norm(near, axis=1, keepdims=True)
    return KernelInput(omega, p)


def property_sweep(seed=0, samples=10**6, p_max=1e3, chunk=200_000, sphere_order=64,
                   sphere_momenta=((0.5, 0.0, 0.0), (0.0, 0.0, 2.0), (1.0, 1.0, 1.0), (1.0, 0.5, -0.25))):
    """Run every kernel property on seeded random samples.

    Returns a dict of named results: violation counts, worst relative
    identity errors, empirical kernel-bound constants and sphere averages.
    """
    rng = np.random.default_rng(seed)
    out = {"samples": 0, "ineq1_violations": 0, "ineq2_violations": 0,
           "ident_a_phi_t": 0.0, "ident_a_phi_x": 0.0, "ident_b_phi_x": 0.0, "ident_c_phi_x": 0.0,
           "bound_a_phi_t": 0.0, "bound_b_phi_t": 0.0, "bound_c_phi_t": 0.0,
           "bound_a_phi_x": 0.0, "bound_b_phi_x": 0.0}
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        inp = random_inputs(rng, m, p_max)
        omega, p, p2, gamma, phat, s = _common(inp)
        ineq = momentum_inequalities(inp)
        out["ineq1_violations"] += int(np.sum(ineq.lhs1 < ineq.rhs1))
        out["ineq2_violations"] += int(np.sum(ineq.lhs2 > ineq.rhs2))
        vm = vm_kernels(inp)
        pt = phi_t_kernels(inp, check=False)
        px = phi_x_kernels(inp)
        # identities measured relative to the size of the terms being combined
        e = np.abs(pt.a + np.sum(vm.aE * p, axis=-1)) / np.maximum(
            np.linalg.norm(vm.aE, axis=-1) * np.sqrt(p2), np.abs(pt.a))
        out["ident_a_phi_t"] = max(out["ident_a_phi_t"], float(np.max(e)))
        # independent expansion of phat x (omega x phat)
        alt = (omega / (1.0 + p2)[..., None] + (1.0 + s)[..., None] * phat) / (gamma * (1.0 + s) ** 2)[..., None]
        # omega + phat can itself cancel, so scale by the raw ingredients |omega| + |phat|
        scale = (1.0 + np.linalg.norm(phat, axis=-1)) / (gamma * (1.0 + s) ** 2)
        e = np.linalg.norm(px.a - alt, axis=-1) / np.maximum(scale, 1e-300)
        out["ident_a_phi_x"] = max(out["ident_a_phi_x"], float(np.max(e)))
        e = np.linalg.norm(px.b - pt.b[:, None] * omega, axis=-1) / np.abs(pt.b).clip(1e-300)
        out["ident_b_phi_x"] = max(out["ident_b_phi_x"], float(np.max(e)))
        e = np.max(np.abs(px.c - np.einsum("ni,nj->nij", omega, pt.c)), axis=(1, 2)) / np.linalg.norm(pt.c, axis=-1).clip(1e-300)
        out["ident_c_phi_x"] = max(out["ident_c_phi_x"], float(np.max(e)))
        out["bound_a_phi_t"] = max(out["bound_a_phi_t"], float(np.max(np.abs(pt.a) / (1.0 + p2))))
        out["bound_b_phi_t"] = max(out["bound_b_phi_t"], float(np.max(np.abs(pt.b) / gamma)))
        out["bound_c_phi_t"] = max(out["bound_c_phi_t"], float(np.max(np.linalg.norm(pt.c, axis=-1))))
        out["bound_a_phi_x"] = max(out["bound_a_phi_x"], float(np.max(np.linalg.norm(px.a, axis=-1) / (1.0 + p2))))
        out["bound_b_phi_x"] = max(out["bound_b_phi_x"], float(np.max(np.linalg.norm(px.b, axis=-1) / gamma)))
        done += m
    out["samples"] = done
    kern = lambda om, pp: phi_tt_kernel(KernelInput(om, pp))
    for k, pm in enumerate(sphere_momenta):
        avg = sphere_average(kern, pm, sphere_order)
        out[f"sphere_avg_{k}"] = avg.value
    return out
