"""Phase extraction from trajectories.

Sign convention: a state exp(-i alpha) |chi> carries phase +alpha. The frame
phase is measured against the moving frame state V(t)|m>; the Pancharatnam
phase against a fixed reference state. They coincide only at times where the
frame returns to itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .evolution import EvolutionResult
from .geometry import HelixPath, PathSpec
from .spin import SpinRepresentation, StateVector, frame_beta, rotation_V


class PhaseError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseDecomposition:
    t: np.ndarray
    total_frame: np.ndarray
    dynamical: np.ndarray
    geometric: np.ndarray
    pancharatnam: np.ndarray  # wrapped to (-pi, pi], NaN where undefined
    pancharatnam_unwrapped: np.ndarray


def wrap_phase(x):
    """Map angles into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return np.where(y == -math.pi, math.pi, y)


def frame_states(path: PathSpec, m: float, rep: SpinRepresentation, t) -> np.ndarray:
    """V(t)|m> along ``path`` (rows), with V built from the wave-vector angles."""
    theta, phi, _, _ = path.angles(np.asarray(t, dtype=float))
    V = rotation_V(frame_beta(theta, phi), rep)
    return V[..., rep.index_of(m)]


def frame_phase(result: EvolutionResult, path: PathSpec, m: float,
                min_overlap: float = 0.1) -> np.ndarray:
    """Phase of the trajectory relative to the moving frame, unwrapped.

    phi(t_i) = -arg <m| V(t_i)^dagger psi(t_i)>, made continuous in t and
    anchored so that phi(t_0) = 0.
    """
    ref = frame_states(path, m, result.rep, result.times)
    overlap = np.einsum("ti,ti->t", ref.conj(), result.states)
    weak = np.abs(overlap) < min_overlap
    if np.any(weak):
        i = int(np.flatnonzero(weak)[0])
        raise PhaseError(
            f"|<frame|psi>| = {abs(overlap[i]):.3g} at t={result.times[i]:.6g}; "
            "trajectory does not follow the frame (check m, theta or the path)"
        )
    phase = np.unwrap(-np.angle(overlap))
    return phase - phase[0]


def dynamical_phase(result: EvolutionResult) -> np.ndarray:
    """Cumulative trapezoidal integral of <psi|H|psi> on the result grid."""
    if result.energy is None or len(result.energy) != len(result.times):
        raise PhaseError("trajectory carries no energy series")
    if len(result.times) == 1:
        return np.zeros(1)
    return cumulative_trapezoid(result.energy, result.times, initial=0.0)


def geometric_phase(total_frame, dynamical) -> np.ndarray:
    total_frame = np.asarray(total_frame, dtype=float)
    dynamical = np.asarray(dynamical, dtype=float)
    if total_frame.shape != dynamical.shape:
        raise PhaseError(f"grid mismatch: {total_frame.shape} vs {dynamical.shape}")
    return total_frame - dynamical


def pancharatnam_phase(psi_ref: StateVector, psi: StateVector, min_overlap: float = 1e-6) -> float:
    """-arg <psi_ref|psi>, wrapped to (-pi, pi]."""
    ov = psi_ref.overlap(psi)
    if abs(ov) <= min_overlap:
        raise PhaseError(f"states are nearly orthogonal (|overlap| = {abs(ov):.3g})")
    return float(wrap_phase(-np.angle(ov)))


def pancharatnam_series(result: EvolutionResult, min_overlap: float = 1e-6):
    """Wrapped and unwrapped Pancharatnam phase against psi(t_0)."""
    ov = result.states @ result.states[0].conj()
    wrapped = wrap_phase(-np.angle(ov))
    ok = np.abs(ov) > min_overlap
    wrapped = np.where(ok, wrapped, np.nan)
    unwrapped = np.full_like(wrapped, np.nan)
    unwrapped[ok] = np.unwrap(wrapped[ok])
    return wrapped, unwrapped


def decompose(result: EvolutionResult, path: PathSpec, m: float) -> PhaseDecomposition:
    total = frame_phase(result, path, m)
    dyn = dynamical_phase(result)
    wrapped, unwrapped = pancharatnam_series(result)
    return PhaseDecomposition(
        t=result.times,
        total_frame=total,
        dynamical=dyn,
        geometric=geometric_phase(total, dyn),
        pancharatnam=wrapped,
        pancharatnam_unwrapped=unwrapped,
    )


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def solid_angle_phase(path: PathSpec, m: float, times) -> np.ndarray:
    """Predicted geometric phase m * int_{t_0}^{t} (1 - cos theta) dphi/dt dt.

    Helices are evaluated in closed form. Other paths are integrated with
    8-point Gauss-Legendre on every piece between path breakpoints and
    requested times. Where theta = 0 the integrand vanishes regardless of
    dphi/dt.
    """
    times = np.asarray(times, dtype=float)
    if isinstance(path, HelixPath):
        return m * path.gamma * (1 - math.cos(path.theta)) * (times - times[0])
    knots = getattr(path, "breakpoints", None)
    edges = times if knots is None else np.union1d(
        times, knots[(knots > times[0]) & (knots < times[-1])]
    )
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    theta, _, _, dphi = path.angles(nodes)
    piece = half * np.sum(_GL_W * (1 - np.cos(theta)) * dphi, axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(piece)])
    return m * cumulative[np.searchsorted(edges, times)]


def helicity_expectation(psi: StateVector, k_hat, rep: SpinRepresentation | None = None) -> float:
    """<psi| k_hat . S |psi> for a unit vector ``k_hat``."""
    rep = rep or psi.rep
    k_hat = np.asarray(k_hat, dtype=float)
    if abs(np.linalg.norm(k_hat) - 1.0) > 1e-12:
        raise ValueError("k_hat must be a unit vector")
    val = psi.expect(rep.dot(k_hat))
    if abs(val.imag) > 1e-12:
        raise ValueError(f"helicity expectation has imaginary part {val.imag:.3g}")
    return val.real
