"""Fiber paths, photon wave vectors and the effective field k x dk/dt / k^2.

A path is described by the spherical angles (theta, phi) of the unit wave
vector as functions of time. Two kinds exist: an analytic helix with constant
polar angle and phi = gamma*t, and a sampled path interpolated from data.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.interpolate import CubicHermiteSpline

SPEED_OF_LIGHT = 299_792_458.0  # m/s

GammaConvention = Literal["paper", "derived"]


class PathError(ValueError):
    """Raised for malformed or unusable path data."""


# --------------------------------------------------------------------------
# Helix geometry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HelixSpec:
    """Physical helix: pitch ``d`` and radius ``a`` in meters, index ``n``."""

    d: float
    a: float
    n: float = 1.0
    handedness: int = 1
    k_mag: float = 1.0

    def __post_init__(self):
        if not (self.d > 0 and self.a >= 0 and self.n >= 1 and self.k_mag > 0):
            raise ValueError(
                f"invalid helix: need d > 0, a >= 0, n >= 1, k_mag > 0 (got {self})"
            )
        if self.handedness not in (1, -1):
            raise ValueError("handedness must be +1 or -1")


def helix_gamma(
    spec: HelixSpec,
    c: float = SPEED_OF_LIGHT,
    convention: GammaConvention = "paper",
) -> float:
    """Azimuthal rotation rate of the wave vector along a helical fiber.

    ``paper``: gamma = 2 pi c / (n sqrt(d^2 + (4 pi a)^2)).
    ``derived``: the arc-length form with (2 pi a)^2 in place of (4 pi a)^2.
    """
    if spec.d == 0 and spec.a == 0:
        raise ValueError("degenerate helix with d = a = 0")
    if convention == "paper":
        loop = math.hypot(spec.d, 4 * math.pi * spec.a)
    elif convention == "derived":
        loop = math.hypot(spec.d, 2 * math.pi * spec.a)
    else:
        raise ValueError(f"unknown gamma convention {convention!r}")
    return spec.handedness * 2 * math.pi * c / (spec.n * loop)


def helix_theta_derived(spec: HelixSpec) -> float:
    """Pitch angle of the tangent to a helix: atan2(2 pi a, d)."""
    return math.atan2(2 * math.pi * spec.a, spec.d)


def helix_wavevector(theta, gamma, k_mag, t) -> np.ndarray:
    """k(t) = k (sin th cos gt, sin th sin gt, cos th); shape (..., 3)."""
    t = np.asarray(t, dtype=float)
    gt = gamma * t
    st = math.sin(theta)
    out = np.stack(
        [st * np.cos(gt), st * np.sin(gt), np.full_like(gt, math.cos(theta))], axis=-1
    )
    return k_mag * out


def _unit_vectors(theta, phi, dtheta, dphi):
    """Unit wave vector and its time derivative from angles and angle rates."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    khat = np.stack([st * cp, st * sp, ct], axis=-1)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    dk = dtheta[..., None] * e_theta + (st * dphi)[..., None] * e_phi
    return khat, dk


# --------------------------------------------------------------------------
# Paths
# --------------------------------------------------------------------------


class PathSpec:
    """Common interface for wave-vector paths.

    Subclasses provide ``angles(t)`` returning (theta, phi, dtheta, dphi).
    """

    k_mag: float = 1.0

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def angles(self, t):
        raise NotImplementedError

    def k_hat(self, t) -> np.ndarray:
        th, ph, dth, dph = self.angles(t)
        return _unit_vectors(th, ph, dth, dph)[0]

    def k(self, t) -> np.ndarray:
        return self.k_mag * self.k_hat(t)

    def kdot(self, t) -> np.ndarray:
        th, ph, dth, dph = self.angles(t)
        return self.k_mag * _unit_vectors(th, ph, dth, dph)[1]

    def field(self, t) -> np.ndarray:
        """Effective field k x kdot / k^2 at time(s) ``t``."""
        th, ph, dth, dph = self.angles(t)
        khat, dk = _unit_vectors(th, ph, dth, dph)
        return np.cross(khat, dk)


@dataclass(frozen=True)
class HelixPath(PathSpec):
    """Conical path: constant polar angle ``theta``, azimuth ``gamma * t``."""

    theta: float
    gamma: float
    k_mag: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise PathError(f"theta must lie in [0, pi], got {self.theta}")
        if not math.isfinite(self.gamma):
            raise PathError("gamma must be finite")
        if not self.k_mag > 0:
            raise PathError("k_mag must be positive")

    @property
    def period(self) -> float:
        if self.gamma == 0:
            return math.inf
        return 2 * math.pi / abs(self.gamma)

    def angles(self, t):
        t = np.asarray(t, dtype=float)
        return (
            np.full_like(t, self.theta),
            self.gamma * t,
            np.zeros_like(t),
            np.full_like(t, self.gamma),
        )

    def k(self, t) -> np.ndarray:
        return helix_wavevector(self.theta, self.gamma, self.k_mag, t)

    def field(self, t) -> np.ndarray:
        # closed form: gamma sin(th) (-cos(th) cos(gt), -cos(th) sin(gt), sin(th))
        t = np.asarray(t, dtype=float)
        s, c = math.sin(self.theta), math.cos(self.theta)
        gt = self.gamma * t
        g = self.gamma * s
        return np.stack(
            [-g * c * np.cos(gt), -g * c * np.sin(gt), np.full_like(gt, g * s)], axis=-1
        )


class SampledPath(PathSpec):
    """Path known at sample times, interpolated between samples.

    Angle rates at the samples come from second-order finite differences
    (central inside, one-sided at the ends). Between samples theta and phi
    are cubic Hermite interpolants matching those values and rates, so the
    wave vector stays a unit vector and the field is exactly perpendicular
    to it at every time.
    """

    def __init__(self, times, theta, phi, k_mag: float = 1.0):
        times = np.asarray(times, dtype=float)
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if times.ndim != 1 or theta.shape != times.shape or phi.shape != times.shape:
            raise PathError("times, theta and phi must be 1-D arrays of equal length")
        if times.size < 3:
            raise PathError(f"need at least 3 samples, got {times.size}")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(theta))
                and np.all(np.isfinite(phi))):
            raise PathError("path samples must be finite")
        steps = np.diff(times)
        if np.any(steps == 0):
            raise PathError("duplicate timestamps in path samples")
        if np.any(steps < 0):
            raise PathError("path sample times must be strictly increasing")
        if not k_mag > 0:
            raise PathError("k_mag must be positive")
        self.times = times
        self.theta = theta
        self.phi = phi
        self.k_mag = float(k_mag)
        self.dtheta = np.gradient(theta, times, edge_order=2)
        self.dphi = np.gradient(phi, times, edge_order=2)
        self._theta = CubicHermiteSpline(times, theta, self.dtheta, extrapolate=False)
        self._phi = CubicHermiteSpline(times, phi, self.dphi, extrapolate=False)
        for arr in (times, theta, phi, self.dtheta, self.dphi):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"SampledPath(n={self.times.size}, t=[{self.times[0]}, {self.times[-1]}], "
                f"k_mag={self.k_mag})")

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.times[0]), float(self.times[-1]))

    def angles(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        span = hi - lo
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise PathError(f"time outside sampled domain [{lo}, {hi}]")
        t = np.clip(t, lo, hi)
        return (
            self._theta(t),
            self._phi(t),
            self._theta(t, 1),
            self._phi(t, 1),
        )

    @property
    def breakpoints(self) -> np.ndarray:
        return self.times


# --------------------------------------------------------------------------
# Effective field
# --------------------------------------------------------------------------


class EffectiveField:
    """Time-dependent field b(t) = k x kdot / k^2 attached to a path."""

    def __init__(self, path: PathSpec):
        self.path = path

    def __call__(self, t) -> np.ndarray:
        return self.path.field(t)

    def k_hat(self, t) -> np.ndarray:
        return self.path.k_hat(t)

    @property
    def domain(self) -> tuple[float, float]:
        return self.path.domain

    @property
    def breakpoints(self):
        return getattr(self.path, "breakpoints", None)


class ConstantField:
    """Static field ``b`` with a fixed reference direction for helicity.

    Not produced by any fiber path; used for control runs where the
    dynamical phase is known to be nonzero.
    """

    def __init__(self, b, k_hat=(0.0, 0.0, 1.0)):
        self.b = np.asarray(b, dtype=float)
        self._k_hat = np.asarray(k_hat, dtype=float)
        self.breakpoints = None

    domain = (-math.inf, math.inf)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.b, t.shape + (3,)).copy()

    def k_hat(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self._k_hat, t.shape + (3,)).copy()


def effective_field(path: PathSpec) -> EffectiveField:
    return EffectiveField(path)


# --------------------------------------------------------------------------
# Ingestion
# --------------------------------------------------------------------------


def _cartesian_to_angles(times, positions, k_mag):
    tangent = np.gradient(positions, times, axis=0, edge_order=2)
    length = np.linalg.norm(tangent, axis=1)
    scale = np.max(np.abs(positions)) + np.max(np.abs(times))
    bad = np.flatnonzero(length <= 1e-14 * max(scale, 1.0))
    if bad.size:
        raise PathError(f"zero-length tangent at sample {int(bad[0])} (t={times[bad[0]]})")
    unit = tangent / length[:, None]
    theta = np.arccos(np.clip(unit[:, 2], -1.0, 1.0))
    phi = np.arctan2(unit[:, 1], unit[:, 0])
    return theta, phi


def _continuous_phi(theta, phi):
    phi = np.array(phi, dtype=float)
    # azimuth is meaningless on the poles; hold the previous value there
    polar = np.sin(theta) < 1e-12
    if np.any(polar):
        first = np.flatnonzero(~polar)
        fill = phi[first[0]] if first.size else 0.0
        for i in range(phi.size):
            if polar[i]:
                phi[i] = phi[i - 1] if i else fill
    phi = np.unwrap(phi)
    jumps = np.abs(np.diff(phi))
    if np.any(jumps >= math.pi):
        i = int(np.argmax(jumps))
        raise PathError(
            f"azimuth step of {jumps[i]:.3f} rad between samples {i} and {i + 1} "
            "is ambiguous; resample the path more densely"
        )
    return phi


def ingest_path(rows, columns=("t", "x", "y", "z"), k_mag: float = 1.0) -> SampledPath:
    """Turn sampled rows into a :class:`SampledPath`.

    ``columns`` is either ``("t", "x", "y", "z")`` (fiber positions; the wave
    vector is taken along the finite-difference tangent) or
    ``("t", "theta", "phi")`` (wave-vector angles in radians).
    """
    rows = np.asarray(rows, dtype=float)
    columns = tuple(c.strip().lower() for c in columns)
    if rows.ndim != 2 or rows.shape[0] < 3:
        raise PathError(f"need at least 3 samples, got {rows.shape[0] if rows.ndim == 2 else 0}")
    if rows.shape[1] != len(columns):
        raise PathError(f"expected {len(columns)} columns, got {rows.shape[1]}")
    times = rows[:, 0]
    steps = np.diff(times)
    if np.any(steps == 0):
        raise PathError("duplicate timestamps in path samples")
    if np.any(steps < 0):
        raise PathError("path sample times must be strictly increasing")
    if columns == ("t", "x", "y", "z"):
        theta, phi = _cartesian_to_angles(times, rows[:, 1:4], k_mag)
    elif columns == ("t", "theta", "phi"):
        theta, phi = rows[:, 1], rows[:, 2]
        if np.any((theta < 0) | (theta > math.pi)):
            raise PathError("theta samples must lie in [0, pi]")
    else:
        raise PathError(f"unsupported columns {columns}; use t,x,y,z or t,theta,phi")
    return SampledPath(times, theta, _continuous_phi(theta, phi), k_mag=k_mag)


def read_path_file(source, k_mag: float = 1.0) -> SampledPath:
    """Read a comma-separated path file (header ``t,x,y,z`` or ``t,theta,phi``)."""
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise PathError("path file is empty")
    header = tuple(h.strip().lower() for h in lines[0].split(","))
    if header not in (("t", "x", "y", "z"), ("t", "theta", "phi")):
        raise PathError(f"unrecognized header {lines[0]!r}; expected t,x,y,z or t,theta,phi")
    try:
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise PathError(f"malformed path data: {exc}") from None
    return ingest_path(data, header, k_mag=k_mag)


def write_path_file(target, times, values, columns=("t", "x", "y", "z")) -> None:
    data = np.column_stack([np.asarray(times, dtype=float), np.asarray(values, dtype=float)])
    np.savetxt(target, data, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")


def sample_helix_positions(theta, gamma, speed, times) -> np.ndarray:
    """Fiber positions whose unit tangent is the helix wave vector at each time.

    Integrates ``speed * k_hat(t)`` from the origin in closed form.
    """
    times = np.asarray(times, dtype=float)
    s, c = math.sin(theta), math.cos(theta)
    gt = gamma * times
    return speed * np.column_stack(
        [s * np.sin(gt) / gamma, s * (1 - np.cos(gt)) / gamma, c * times]
    )


# --------------------------------------------------------------------------
# Checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MotionIdentityReport:
    max_residual: float
    error_bound: float  # 0 for analytic paths


def check_motion_identity(path: PathSpec, t_grid) -> MotionIdentityReport:
    """Max of |kdot + k x (k x kdot / k^2)| / |kdot| over ``t_grid``.

    Analytic paths use their exact derivative. Sampled paths differentiate
    k(t) on ``t_grid`` by finite differences, and the report carries an
    estimate of the truncation error of that derivative.
    Samples with kdot = 0 contribute a residual of 0.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    k = path.k(t_grid)
    if isinstance(path, SampledPath):
        if t_grid.size < 5:
            raise PathError("need at least 5 grid points to check a sampled path")
        kdot = np.gradient(k, t_grid, axis=0, edge_order=2)
        third = np.gradient(np.gradient(kdot, t_grid, axis=0, edge_order=2),
                            t_grid, axis=0, edge_order=2)
        h = np.max(np.diff(t_grid))
    else:
        kdot = path.kdot(t_grid)
        third = None
    k2 = np.sum(k * k, axis=-1)[..., None]
    resid = kdot + np.cross(k, np.cross(k, kdot) / k2)
    rnorm = np.linalg.norm(resid, axis=-1)
    knorm = np.linalg.norm(kdot, axis=-1)
    scale = np.max(knorm) if knorm.size else 0.0
    moving = knorm > 1e-14 * max(scale, 1e-300)
    ratio = np.zeros_like(rnorm)
    ratio[moving] = rnorm[moving] / knorm[moving]
    bound = 0.0
    if third is not None and np.any(moving):
        err = h * h / 6 * np.linalg.norm(third, axis=-1)
        bound = float(np.max(err[moving] / knorm[moving]))
    return MotionIdentityReport(float(np.max(ratio, initial=0.0)), bound)


def initial_wavevector_check(k0, theta: float, rtol: float = 1e-12) -> bool:
    """True iff k0 lies in the x-z plane with k_x / k_z = tan(theta)."""
    k0 = np.asarray(k0, dtype=float)
    norm = float(np.linalg.norm(k0))
    if norm <= 0:
        raise ValueError("k0 must be nonzero")
    in_plane = abs(k0[1]) <= rtol * norm
    on_cone = abs(k0[0] * math.cos(theta) - k0[2] * math.sin(theta)) <= rtol * norm
    return bool(in_plane and on_cone)
