"""Staggered parameter grids and finite-difference machinery.

The generating curve of an axisymmetric surface is sampled at parameter
nodes t_1 < ... < t_n strictly inside (-pi/2, pi/2); the poles t = -pi/2
and t = +pi/2 carry no node.  Fields are extended across the poles by
reflection: the radial coordinate (and any field sharing its parity) is
odd about each pole, the height coordinate and scalar surface fields are
even.  Two ghost nodes per side are enough for the five-point stencils
used throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidProfile

HALF_PI = 0.5 * np.pi

ODD = -1.0
EVEN = 1.0

# Classical five-point interior weights (uniform spacing h):
#   d/dt  : (u[-2] - 8 u[-1] + 8 u[+1] - u[+2]) / (12 h)
#   d2/dt2: (-u[-2] + 16 u[-1] - 30 u[0] + 16 u[+1] - u[+2]) / (12 h^2)
# and the staggered four-point weights at cell faces:
#   value : (-u[-3/2] + 9 u[-1/2] + 9 u[+1/2] - u[+3/2]) / 16
#   d/dt  : (u[-3/2] - 27 u[-1/2] + 27 u[+1/2] - u[+3/2]) / (24 h)
_D1_UNIFORM = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_UNIFORM = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_FACE_AVG_UNIFORM = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_FACE_D_UNIFORM = np.array([1.0, -27.0, 27.0, -1.0]) / 24.0


def fornberg_weights(x0, xs, max_order):
    """Finite-difference weights at x0 for derivative orders 0..max_order.

    Classic Fornberg recursion; ``xs`` are the stencil abscissae.  Returns an
    array of shape (max_order + 1, len(xs)).
    """
    xs = np.asarray(xs, dtype=float)
    npts = xs.size
    c = np.zeros((max_order + 1, npts))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, npts):
        mn = min(i, max_order)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = ((xs[i] - x0) * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = (xs[i] - x0) * c[0, j] / c3
        c1 = c2
    return c


def uniform_params(n):
    """Staggered uniform grid t_i = -pi/2 + (i + 1/2) * pi/n."""
    h = np.pi / n
    return -HALF_PI + (np.arange(n) + 0.5) * h


# Pole-corrected quadrature weight deviations, in units of h, for the two
# nodes adjacent to each pole.  Midpoint sums of the area-measure integrands
# are only O(h^2) accurate because every integrand carries the odd factor r
# and so has nonzero slope at the poles.  The two leading Euler-Maclaurin
# endpoint terms,
#
#     (h^2/24) [f'(b) - f'(a)] - (7 h^4/5760) [f'''(b) - f'''(a)],
#
# are folded into the weights.  The pole derivatives come from the staggered
# four-point stencils whose outer half lies on the odd-reflected ghost
# values, so they are centered at the pole:
#
#     f'(b)   = (2 f[-2] - 54 f[-1]) / (24 h) + O(h^4),
#     f'''(b) = (6 f[-1] - 2 f[-2]) / h^3     + O(h^2),
#
# which makes the corrected rule O(h^6) for smooth odd integrands while the
# weights stay strictly positive.
_QUAD_DELTA_EDGE = -54.0 / 576.0 - 42.0 / 5760.0   # node touching the pole
_QUAD_DELTA_NEXT = 2.0 / 576.0 + 14.0 / 5760.0     # its neighbour


class StaggeredGrid:
    """Stencil and quadrature data bound to a fixed parameter grid.

    Everything here depends only on the parameter values, not on node
    positions, so one grid is shared by every curve produced along a flow.
    """

    def __init__(self, params):
        t = np.ascontiguousarray(params, dtype=float)
        if t.ndim != 1:
            raise InvalidProfile("params must be a one-dimensional sequence")
        n = t.size
        if n < 16:
            raise InvalidProfile(f"need at least 16 nodes, got {n}")
        if not (t[0] > -HALF_PI and t[-1] < HALF_PI):
            raise InvalidProfile("params must lie strictly inside (-pi/2, pi/2)")
        if np.any(np.diff(t) <= 0.0):
            raise InvalidProfile("params must be strictly increasing")

        self.params = t
        self.n = n

        h = np.pi / n
        ideal = -HALF_PI + (np.arange(n) + 0.5) * h
        self.is_uniform = bool(np.max(np.abs(t - ideal)) < 1e-12)
        self.h = h if self.is_uniform else float(np.min(np.diff(t)))

        # Padded parameter vector with two reflected ghosts per side.
        self._t_pad = np.concatenate(
            [[-np.pi - t[1], -np.pi - t[0]], t, [np.pi - t[-1], np.pi - t[-2]]]
        )

        # Quadrature cell widths; cell boundaries are parameter midpoints,
        # pole-adjacent cells extend to the poles themselves.
        bounds = np.empty(n + 1)
        bounds[0] = -HALF_PI
        bounds[-1] = HALF_PI
        bounds[1:-1] = 0.5 * (t[:-1] + t[1:])
        self.cell_widths = np.diff(bounds)
        self.faces = bounds[1:-1]            # n-1 interior faces
        self.face_widths = np.diff(t)        # flux quadrature weight per face
        self.quad_widths = self._corrected_widths()

        self._build_weights()

    def _corrected_widths(self):
        """Quadrature weights: pole-corrected on uniform grids, else midpoint."""
        if not self.is_uniform:
            return self.cell_widths.copy()
        q = self.cell_widths.copy()
        h = self.h
        q[0] += _QUAD_DELTA_EDGE * h
        q[-1] += _QUAD_DELTA_EDGE * h
        q[1] += _QUAD_DELTA_NEXT * h
        q[-2] += _QUAD_DELTA_NEXT * h
        return q

    def _build_weights(self):
        n, t = self.n, self.params
        tp = self._t_pad
        if self.is_uniform:
            h = self.h
            self.w_d1 = np.broadcast_to(_D1_UNIFORM / h, (n, 5))
            self.w_d2 = np.broadcast_to(_D2_UNIFORM / (h * h), (n, 5))
            self.w_face_avg = np.broadcast_to(_FACE_AVG_UNIFORM, (n - 1, 4))
            self.w_face_d = np.broadcast_to(_FACE_D_UNIFORM / h, (n - 1, 4))
            return
        w_d1 = np.empty((n, 5))
        w_d2 = np.empty((n, 5))
        for i in range(n):
            c = fornberg_weights(t[i], tp[i : i + 5], 2)
            w_d1[i] = c[1]
            w_d2[i] = c[2]
        nf = n - 1
        w_face_avg = np.empty((nf, 4))
        w_face_d = np.empty((nf, 4))
        for j in range(nf):
            c = fornberg_weights(self.faces[j], tp[j + 1 : j + 5], 1)
            w_face_avg[j] = c[0]
            w_face_d[j] = c[1]
        self.w_d1 = w_d1
        self.w_d2 = w_d2
        self.w_face_avg = w_face_avg
        self.w_face_d = w_face_d

    # -- ghost padding -------------------------------------------------

    def pad(self, u, parity):
        """Extend a nodal field with two reflected ghost values per side."""
        u = np.asarray(u, dtype=float)
        out = np.empty(self.n + 4)
        out[2:-2] = u
        out[1] = parity * u[0]
        out[0] = parity * u[1]
        out[-2] = parity * u[-1]
        out[-1] = parity * u[-2]
        return out

    # -- nodal derivatives ----------------------------------------------

    def _apply(self, weights, u_pad, count, offset):
        out = weights[:, 0] * u_pad[offset : offset + count]
        for k in range(1, weights.shape[1]):
            out = out + weights[:, k] * u_pad[offset + k : offset + k + count]
        return out

    def d1(self, u, parity):
        """First parameter derivative of a nodal field."""
        return self._apply(self.w_d1, self.pad(u, parity), self.n, 0)

    def d2(self, u, parity):
        """Second parameter derivative of a nodal field."""
        return self._apply(self.w_d2, self.pad(u, parity), self.n, 0)

    # -- face (staggered) operators --------------------------------------

    def face_value(self, u, parity):
        """Field interpolated to the n-1 interior cell faces."""
        return self._apply(self.w_face_avg, self.pad(u, parity), self.n - 1, 1)

    def face_d(self, u, parity):
        """First derivative at the interior cell faces."""
        return self._apply(self.w_face_d, self.pad(u, parity), self.n - 1, 1)

    def face_divergence(self, flux):
        """Adjoint of ``face_d`` (even parity) applied to a face flux.

        Returns the nodal vector y with  y_i = sum_j (w_face_d)_{j,i} flux_j,
        ghost contributions folded back with even parity.  Together with the
        quadrature weights this makes the assembled Laplace operator exactly
        self-adjoint in the discrete L^2(d mu) inner product.
        """
        n = self.n
        nf = n - 1
        y_pad = np.zeros(n + 4)
        w = self.w_face_d
        for k in range(4):
            y_pad[1 + k : 1 + k + nf] += w[:, k] * flux
        y = y_pad[2:-2].copy()
        y[0] += y_pad[1]
        y[1] += y_pad[0]
        y[-1] += y_pad[-2]
        y[-2] += y_pad[-1]
        return y
