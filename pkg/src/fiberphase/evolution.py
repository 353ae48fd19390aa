"""Time evolution under H(t) = b(t) . S.

Numerical propagation uses the classical fourth-order Runge-Kutta scheme on
a fixed internal step. The closed-form conical solution is provided as an
independent oracle for helical paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spin import SpinRepresentation, StateVector, frame_beta, rotation_V

DEFAULT_STEPS_PER_PERIOD = 6283  # gamma * step ~ 1e-3
LTE_LIMIT = 1e-6


class StepSizeWarning(UserWarning):
    pass


class StepSizeError(ValueError):
    pass


# --------------------------------------------------------------------------
# Hamiltonians
# --------------------------------------------------------------------------


def hamiltonian_at(field, rep: SpinRepresentation, t) -> np.ndarray:
    """H(t) = b_x Sx + b_y Sy + b_z Sz; a stack of matrices for array ``t``."""
    b = np.asarray(field(t), dtype=float)
    return (b[..., 0, None, None] * rep.Sx
            + b[..., 1, None, None] * rep.Sy
            + b[..., 2, None, None] * rep.Sz)


def wang_keiji_hamiltonian(omega1, omega0, gamma, rep: SpinRepresentation, t) -> np.ndarray:
    """omega1 (cos gt Sx + sin gt Sy) + (omega0 + gamma) Sz."""
    t = np.asarray(t, dtype=float)
    gt = gamma * t
    return (omega1 * np.cos(gt)[..., None, None] * rep.Sx
            + omega1 * np.sin(gt)[..., None, None] * rep.Sy
            + (omega0 + gamma) * np.ones_like(gt)[..., None, None] * rep.Sz)


@dataclass(frozen=True)
class WangKeijiParams:
    omega1: float
    omega0: float
    gamma: float
    theta: float

    def __post_init__(self):
        # arctan(omega1/omega0) only fixes theta modulo pi
        if abs(math.sin(self.theta) * self.omega0 - math.cos(self.theta) * self.omega1) > (
            1e-12 * math.hypot(self.omega0, self.omega1)
        ):
            raise ValueError("theta is inconsistent with arctan(omega1 / omega0)")

    @property
    def residual(self) -> float:
        """omega1^2 + omega0^2 + gamma*omega0 (zero when the dynamical phase vanishes)."""
        return self.omega1 ** 2 + self.omega0 ** 2 + self.gamma * self.omega0


def wang_keiji_decompose(theta: float, gamma: float) -> WangKeijiParams:
    """Match the helix Hamiltonian onto the rotating-field form.

    Comparing coefficients gives omega1 = -gamma sin(th) cos(th) and
    omega0 + gamma = gamma sin^2(th), i.e. omega0 = -gamma cos^2(th).
    """
    if not (0 < theta < math.pi):
        raise ValueError(f"theta must lie strictly inside (0, pi), got {theta}")
    if gamma == 0 or not math.isfinite(gamma):
        raise ValueError("gamma must be finite and nonzero")
    s, c = math.sin(theta), math.cos(theta)
    if abs(c) < 1e-9:
        raise ValueError("theta = pi/2 gives omega1 = omega0 = 0; arctan(omega1/omega0) undefined")
    return WangKeijiParams(omega1=-gamma * s * c, omega0=-gamma * c * c, gamma=gamma, theta=theta)


# --------------------------------------------------------------------------
# Closed form
# --------------------------------------------------------------------------


def _check_m(m: float, rep: SpinRepresentation) -> None:
    if abs(m) < 1e-12:
        raise ValueError("m = 0 (longitudinal) is not a valid photon initial state")
    if abs(abs(m) - rep.j) > 1e-12:
        raise ValueError(f"initial label must be m = +/-{rep.j}, got {m}")


def conditional_initial_state(m: float, theta: float, rep: SpinRepresentation,
                              phi: float = 0.0) -> StateVector:
    """V(0)|m> = exp(-i theta Sy)|m> (or the frame state at azimuth ``phi``)."""
    _check_m(m, rep)
    if not (0 <= theta <= math.pi):
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    V = rotation_V(frame_beta(theta, phi), rep)
    return StateVector(V[:, rep.index_of(m)], rep)


def geometric_rate(m: float, theta: float, gamma: float) -> float:
    """d(phase)/dt = m gamma (1 - cos theta) for the conical path."""
    return m * gamma * (1.0 - math.cos(theta))


def closed_form_states(m: float, theta: float, gamma: float, rep: SpinRepresentation, t):
    """Exact conical solution exp(-i phi_m(t)) V(t)|m> on an array of times.

    Returns ``(states, phase)`` with ``states`` of shape (len(t), dim) and
    phase = m gamma (1 - cos theta) t (the dynamical part is zero).
    """
    _check_m(m, rep)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phase = geometric_rate(m, theta, gamma) * t
    V = rotation_V(frame_beta(theta, gamma * t), rep)
    states = V[..., rep.index_of(m)] * np.exp(-1j * phase)[:, None]
    return states, phase


def closed_form_state(m: float, theta: float, gamma: float, rep: SpinRepresentation,
                      t: float) -> tuple[StateVector, float]:
    states, phase = closed_form_states(m, theta, gamma, rep, [t])
    return StateVector(states[0], rep), float(phase[0])


# --------------------------------------------------------------------------
# Numerical propagation
# --------------------------------------------------------------------------


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)
    helicity: np.ndarray
    energy: np.ndarray
    norm_drift: float
    rep: SpinRepresentation
    step: float
    n_steps: int

    def state(self, i: int) -> StateVector:
        return StateVector(self.states[i], self.rep, atol=max(1e-12, 10 * self.norm_drift))

    @property
    def helicity_drift(self) -> float:
        return float(np.max(np.abs(self.helicity - self.helicity[0])))


def _internal_grid(t_grid: np.ndarray, step: float):
    spans = np.diff(t_grid)
    counts = np.maximum(1, np.ceil(spans / step - 1e-9).astype(int))
    starts = np.repeat(t_grid[:-1], counts)
    hs = np.repeat(spans / counts, counts)
    offsets = np.concatenate([np.arange(c) for c in counts]) if counts.size else np.array([])
    starts = starts + offsets * hs
    return starts, hs, counts


def _rk4_propagators(field, rep, starts, hs):
    """One-step RK4 maps for the linear ODE psi' = -i H(t) psi.

    RK4 applied to a linear system is a fixed matrix per step; it is built
    here for all steps at once by running the stages on the identity.
    """
    A1 = -1j * hamiltonian_at(field, rep, starts)
    A2 = -1j * hamiltonian_at(field, rep, starts + 0.5 * hs)
    A3 = -1j * hamiltonian_at(field, rep, starts + hs)
    h = hs[:, None, None]
    eye = np.eye(rep.dim)
    K1 = A1
    K2 = A2 @ (eye + 0.5 * h * K1)
    K3 = A2 @ (eye + 0.5 * h * K2)
    K4 = A3 @ (eye + h * K3)
    return eye + h / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4)


def estimate_local_error(field, rep, t_grid, step) -> float:
    """Rough RK4 local truncation estimate (|H| h)^5 / 120 over the grid."""
    probe = np.linspace(t_grid[0], t_grid[-1], min(4096, 16 * len(t_grid)))
    bmax = float(np.max(np.linalg.norm(field(probe), axis=-1), initial=0.0))
    return (rep.j * bmax * step) ** 5 / 120.0


def integrate(field, rep: SpinRepresentation, psi0: StateVector, t_grid, step: float,
              *, strict: bool = False, chunk: int = 1 << 15) -> EvolutionResult:
    """Propagate i dpsi/dt = H(t) psi with fixed-step RK4.

    Each interval of ``t_grid`` is split into the smallest number of equal
    substeps no longer than ``step``; states are recorded on ``t_grid`` only.
    The state is never renormalized. With ``strict`` a step whose estimated
    local error exceeds 1e-6 raises instead of warning.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if not step > 0:
        raise ValueError("step must be positive")
    if psi0.rep.dim != rep.dim:
        raise ValueError("initial state does not match the spin representation")
    lo, hi = getattr(field, "domain", (-math.inf, math.inf))
    if t_grid[0] < lo or t_grid[-1] > hi:
        raise ValueError(f"t_grid [{t_grid[0]}, {t_grid[-1]}] outside field domain [{lo}, {hi}]")

    lte = estimate_local_error(field, rep, t_grid, step)
    if lte > LTE_LIMIT:
        msg = f"estimated local truncation error {lte:.2e} exceeds {LTE_LIMIT:g}; reduce step"
        if strict:
            raise StepSizeError(msg)
        warnings.warn(msg, StepSizeWarning, stacklevel=2)

    starts, hs, counts = _internal_grid(t_grid, step)
    record = np.cumsum(counts)  # internal step index that lands on each outer point
    states = np.empty((t_grid.size, rep.dim), dtype=complex)
    psi = np.array(psi0.amplitudes, dtype=complex)
    states[0] = psi
    out = 1
    for lo_i in range(0, starts.size, chunk):
        props = _rk4_propagators(field, rep, starts[lo_i:lo_i + chunk], hs[lo_i:lo_i + chunk])
        for k, M in enumerate(props, start=lo_i + 1):
            psi = M @ psi
            if out < t_grid.size and k == record[out - 1]:
                states[out] = psi
                out += 1

    H = hamiltonian_at(field, rep, t_grid)
    energy = np.einsum("ti,tij,tj->t", states.conj(), H, states).real
    helicity_op = np.einsum("tk,kij->tij", field.k_hat(t_grid),
                            np.stack([rep.Sx, rep.Sy, rep.Sz]))
    helicity = np.einsum("ti,tij,tj->t", states.conj(), helicity_op, states).real
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return EvolutionResult(
        times=t_grid, states=states, helicity=helicity, energy=energy,
        norm_drift=drift, rep=rep, step=step, n_steps=int(starts.size),
    )
