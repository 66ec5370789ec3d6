"""Profile curves: the sole surface representation.

An axisymmetric closed surface is generated by rotating the curve
t -> (r(t), z(t)), t in (-pi/2, pi/2), about the z-axis.  Both ends of the
curve close onto the axis (r -> 0) and meet it orthogonally; the staggered
grid keeps every node strictly away from the poles so that no 1/r factor
is ever evaluated at r = 0.

Orientation is pinned so that the round unit sphere has mean curvature
H = +2 and signed volume V = +4 pi / 3 (inward-pointing unit normal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ImmersionLost, InvalidProfile
from .grid import ODD, EVEN, HALF_PI, StaggeredGrid, uniform_params

PROFILE_HEADER = "# isoflow-profile v1"

#: Symmetry conditions closing the curve onto the axis at t = +/- pi/2:
#: the radial coordinate reflects oddly, the height evenly, so the surface
#: extends smoothly over each pole.
POLE_CLOSURE = ("r odd / z even about t = -pi/2", "r odd / z even about t = +pi/2")


@dataclass
class ProfileCurve:
    """Discrete generating curve of an axisymmetric surface."""

    params: np.ndarray
    radial: np.ndarray
    height: np.ndarray
    closure: tuple = POLE_CLOSURE

    _grid: StaggeredGrid | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.params = np.ascontiguousarray(self.params, dtype=float)
        self.radial = np.ascontiguousarray(self.radial, dtype=float)
        self.height = np.ascontiguousarray(self.height, dtype=float)
        n = self.params.size
        if self.radial.size != n or self.height.size != n:
            raise InvalidProfile("params, radial and height must share one length")
        if self._grid is None:
            self._grid = StaggeredGrid(self.params)
        if np.any(self.radial <= 0.0):
            raise InvalidProfile("radial coordinates must be strictly positive")
        if not np.all(np.isfinite(self.radial)) or not np.all(np.isfinite(self.height)):
            raise InvalidProfile("non-finite node coordinates")

    @property
    def n(self) -> int:
        return self.params.size

    @property
    def grid(self) -> StaggeredGrid:
        return self._grid

    def with_positions(self, radial, height) -> "ProfileCurve":
        """New curve with the same parameter grid but moved nodes."""
        return ProfileCurve(self.params, radial, height, self.closure, _grid=self._grid)

    def speed(self) -> np.ndarray:
        """Profile speed sqrt(r'^2 + z'^2) at every node."""
        g = self.grid
        return np.hypot(g.d1(self.radial, ODD), g.d1(self.height, EVEN))

    def check_immersion(self, floor: float = 1e-12):
        """Raise ImmersionLost if the discrete immersion condition fails."""
        w = self.speed()
        scale = float(np.max(np.abs(self.radial)) + np.max(np.abs(self.height)))
        if np.any(~np.isfinite(w)) or np.any(w <= floor * max(scale, 1.0)):
            raise ImmersionLost("profile speed vanished at a node")
        return w

    def scaled(self, factor: float) -> "ProfileCurve":
        """Curve scaled about the origin by ``factor``."""
        return self.with_positions(factor * self.radial, factor * self.height)


def bare_curve(template: ProfileCurve, radial, height) -> ProfileCurve:
    """Unvalidated positional update sharing the template's grid (hot paths).

    Callers are responsible for degeneracy checks; the flow loop re-checks
    the immersion on every velocity evaluation.
    """
    c = object.__new__(ProfileCurve)
    c.params = template.params
    c.radial = radial
    c.height = height
    c.closure = template.closure
    c._grid = template._grid
    return c


def sphere_profile(radius: float, n: int) -> ProfileCurve:
    """Round-sphere profile r = R cos t, z = R sin t on the staggered grid."""
    if radius <= 0.0:
        raise InvalidProfile(f"radius must be positive, got {radius}")
    if n < 16:
        raise InvalidProfile(f"need at least 16 nodes, got {n}")
    t = uniform_params(n)
    return ProfileCurve(t, radius * np.cos(t), radius * np.sin(t))


# -- snapshot files ------------------------------------------------------


def write_profile(curve: ProfileCurve, path):
    """Write a plain-text profile snapshot (full double precision)."""
    lines = [f"{PROFILE_HEADER} n={curve.n}"]
    for t, r, z in zip(curve.params, curve.radial, curve.height):
        lines.append(f"{float(t)!r} {float(r)!r} {float(z)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_profile(path) -> ProfileCurve:
    """Read a profile snapshot written by :func:`write_profile`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(PROFILE_HEADER):
        raise InvalidProfile(f"{path}: missing '{PROFILE_HEADER}' header")
    try:
        n = int(lines[0].split("n=")[1])
    except (IndexError, ValueError) as exc:
        raise InvalidProfile(f"{path}: malformed header {lines[0]!r}") from exc
    rows = lines[1:]
    if len(rows) != n:
        raise InvalidProfile(f"{path}: header says n={n} but found {len(rows)} rows")
    data = np.empty((n, 3))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 3:
            raise InvalidProfile(f"{path}: row {i + 2} is not 't r z'")
        data[i] = [float(p) for p in parts]
    return ProfileCurve(data[:, 0], data[:, 1], data[:, 2])


# -- reparametrization -----------------------------------------------------


def resample_equal_arclength(curve: ProfileCurve) -> ProfileCurve:
    """Reparametrize so nodes sit at equal arclength spacing.

    The image of the curve is (approximately) preserved; only the node
    placement changes.  The result lives on the uniform staggered grid.
    """
    from scipy.interpolate import CubicSpline

    g = curve.grid
    t_pad = g._t_pad
    r_pad = g.pad(curve.radial, ODD)
    z_pad = g.pad(curve.height, EVEN)
    sp_r = CubicSpline(t_pad, r_pad)
    sp_z = CubicSpline(t_pad, z_pad)

    m = 8 * curve.n
    tf = np.linspace(-HALF_PI, HALF_PI, m + 1)
    wf = np.hypot(sp_r(tf, 1), sp_z(tf, 1))
    s = np.concatenate([[0.0], np.cumsum(0.5 * (wf[1:] + wf[:-1]) * np.diff(tf))])
    total = s[-1]

    n = curve.n
    targets = (np.arange(n) + 0.5) * total / n
    t_star = np.interp(targets, s, tf)
    new = ProfileCurve(uniform_params(n), sp_r(t_star), sp_z(t_star), curve.closure)
    new.check_immersion()
    return new
