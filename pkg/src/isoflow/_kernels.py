"""Fused geometry/velocity evaluation for uniform staggered grids.

The flow loop evaluates the full geometry pipeline four times per time step,
so the uniform-grid case is written as a single function over plain arrays
and compiled with numba when available (falling back to the same pure-numpy
code otherwise).  The math is identical to the reference pipeline in
:mod:`isoflow.geometry`; tests pin the two paths against each other.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly wherever numba is installed
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrapper(func):
            return func

        return wrapper


TWO_PI = 2.0 * np.pi


@njit(cache=True)
def _pad_odd(u, n):
    out = np.empty(n + 4)
    out[2 : n + 2] = u
    out[1] = -u[0]
    out[0] = -u[1]
    out[n + 2] = -u[n - 1]
    out[n + 3] = -u[n - 2]
    return out


@njit(cache=True)
def _pad_even(u, n):
    out = np.empty(n + 4)
    out[2 : n + 2] = u
    out[1] = u[0]
    out[0] = u[1]
    out[n + 2] = u[n - 1]
    out[n + 3] = u[n - 2]
    return out


@njit(cache=True)
def _d1(up, n, h):
    return (up[0:n] - 8.0 * up[1 : n + 1] + 8.0 * up[3 : n + 3] - up[4 : n + 4]) / (
        12.0 * h
    )


@njit(cache=True)
def _d2(up, n, h):
    return (
        -up[0:n]
        + 16.0 * up[1 : n + 1]
        - 30.0 * up[2 : n + 2]
        + 16.0 * up[3 : n + 3]
        - up[4 : n + 4]
    ) / (12.0 * h * h)


@njit(cache=True)
def _face_value(up, n):
    nf = n - 1
    return (
        -up[1 : 1 + nf] + 9.0 * up[2 : 2 + nf] + 9.0 * up[3 : 3 + nf] - up[4 : 4 + nf]
    ) / 16.0


@njit(cache=True)
def _face_d(up, n, h):
    nf = n - 1
    return (
        up[1 : 1 + nf] - 27.0 * up[2 : 2 + nf] + 27.0 * up[3 : 3 + nf] - up[4 : 4 + nf]
    ) / (24.0 * h)


@njit(cache=True)
def _face_divergence_even(flux, n, h):
    nf = n - 1
    scaled = flux / (24.0 * h)
    y = np.zeros(n + 4)
    y[1 : 1 + nf] += scaled
    y[2 : 2 + nf] -= 27.0 * scaled
    y[3 : 3 + nf] += 27.0 * scaled
    y[4 : 4 + nf] -= scaled
    out = y[2 : n + 2].copy()
    out[0] += y[1]
    out[1] += y[0]
    out[n - 1] += y[n + 2]
    out[n - 2] += y[n + 3]
    return out


@njit(cache=True)
def uniform_fields(r, z, h, qw):
    """Geometry, multiplier data and flow velocity on a uniform grid.

    Returns
    -------
    (w, nur, nuz, H, A0sq, lapH, gradHsq, mu, xi,
     area, vol, wil, w0, num, den, lam, int_xi, int_a0h, diss)
    """
    n = r.shape[0]
    rp_ = _pad_odd(r, n)
    zp_ = _pad_even(z, n)

    rp = _d1(rp_, n, h)
    zp = _d1(zp_, n, h)
    w = np.sqrt(rp * rp + zp * zp)
    nur = -zp / w
    nuz = rp / w

    rpp = _d2(rp_, n, h)
    zpp = _d2(zp_, n, h)
    w3 = w * w * w
    km = (rp * zpp - rpp * zp) / w3
    kp = zp / (r * w)
    H = km + kp
    A0sq = 0.5 * (km - kp) * (km - kp)

    mu = TWO_PI * (r * w * qw)
    area = np.sum(mu)
    vol = TWO_PI / 3.0 * np.sum((r * r * zp - r * z * rp) * qw)

    wil = 0.25 * np.sum(H * H * mu)
    w0 = np.sum(A0sq * mu)

    # Laplace-Beltrami of H in self-adjoint flux form
    r_face = _face_value(rp_, n)
    w_face = _face_value(_pad_even(w, n), n)
    Hp_ = _pad_even(H, n)
    du = _face_d(Hp_, n, h)
    flux = h * (r_face / w_face) * du
    lapH = -_face_divergence_even(flux, n, h) / (r * w * qw)

    gH = _d1(Hp_, n, h) / w
    gradHsq = gH * gH

    if vol != 0.0:
        P = 3.0 * H / area - 2.0 / vol
    else:
        P = 3.0 * H / area
    gw0 = lapH + A0sq * H
    num = np.sum(gw0 * P * mu)
    den = np.sum(P * P * mu)
    if den > 0.0:
        lam = num / den
    else:
        lam = np.nan
    xi = -gw0 + lam * P

    int_xi = np.sum(xi * mu)
    int_a0h = np.sum(A0sq * H * mu)
    diss = np.sum(xi * xi * mu)

    return (
        w, nur, nuz, H, A0sq, lapH, gradHsq, mu, xi,
        area, vol, wil, w0, num, den, lam, int_xi, int_a0h, diss,
    )


@njit(cache=True)
def uniform_area_volume(r, z, h, qw):
    """Area and signed volume only (projection inner loop)."""
    n = r.shape[0]
    rp_ = _pad_odd(r, n)
    zp_ = _pad_even(z, n)
    rp = _d1(rp_, n, h)
    zp = _d1(zp_, n, h)
    w = np.sqrt(rp * rp + zp * zp)
    area = TWO_PI * np.sum(r * w * qw)
    vol = TWO_PI / 3.0 * np.sum((r * r * zp - r * z * rp) * qw)
    return area, vol


@njit(cache=True)
def _guard_code(r, w, area, vol, wil, den, sigma):
    """0 = ok, 1 = immersion lost, 2 = zero volume, 3 = degenerate denominator."""
    n = r.shape[0]
    scale = np.sqrt(area / (4.0 * np.pi))
    for i in range(n):
        if r[i] <= 0.0 or not np.isfinite(w[i]) or w[i] <= 1e-12 * scale:
            return 1
    if vol == 0.0:
        return 2
    gap = np.sqrt(4.0 * np.pi / sigma) - np.sqrt(max(wil, 0.0))
    if gap > 0.0:
        floor = 1e-6 * 36.0 * gap * gap / (area * area)
    else:
        floor = 1e-12 / (area * area)
    if not (den > floor):
        return 3
    return 0


@njit(cache=True)
def rk4_tail(r, z, h, qw, dt, k1r, k1z, sigma):
    """Stages 2-4 of the classical step, given the stage-1 velocity.

    Returns (r_new, z_new, guard code); on a nonzero code the positions are
    garbage and must be discarded.
    """
    half = 0.5 * dt
    out2 = uniform_fields(r + half * k1r, z + half * k1z, h, qw)
    code = _guard_code(r + half * k1r, out2[0], out2[9], out2[10], out2[11], out2[14], sigma)
    if code != 0:
        return r, z, code
    k2r, k2z = out2[8] * out2[1], out2[8] * out2[2]

    out3 = uniform_fields(r + half * k2r, z + half * k2z, h, qw)
    code = _guard_code(r + half * k2r, out3[0], out3[9], out3[10], out3[11], out3[14], sigma)
    if code != 0:
        return r, z, code
    k3r, k3z = out3[8] * out3[1], out3[8] * out3[2]

    out4 = uniform_fields(r + dt * k3r, z + dt * k3z, h, qw)
    code = _guard_code(r + dt * k3r, out4[0], out4[9], out4[10], out4[11], out4[14], sigma)
    if code != 0:
        return r, z, code
    k4r, k4z = out4[8] * out4[1], out4[8] * out4[2]

    sixth = dt / 6.0
    r_new = r + sixth * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    z_new = z + sixth * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return r_new, z_new, 0
