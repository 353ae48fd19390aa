"""Spin operator matrices and small unitary exponentials.

Basis order is the S_z eigenbasis with m = +j, j-1, ..., -j, so index 0 is
the "up" state and index -1 the "down" state. Units have hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

SUPPORTED_SPINS = (Fraction(1, 2), Fraction(1))


def _as_spin(j) -> Fraction:
    try:
        value = Fraction(j).limit_denominator(4)
    except (TypeError, ValueError):
        raise ValueError(f"spin quantum number must be 1/2 or 1, got {j!r}") from None
    if value not in SUPPORTED_SPINS or abs(float(value) - float(j)) > 1e-12:
        raise ValueError(f"spin quantum number must be 1/2 or 1, got {j!r}")
    return value


@dataclass(frozen=True, eq=False)
class SpinRepresentation:
    """Spin-j operator matrices in the S_z eigenbasis (m = +j ... -j)."""

    j: float
    Sx: np.ndarray = field(repr=False)
    Sy: np.ndarray = field(repr=False)
    Sz: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.Sz.shape[0]

    @property
    def Splus(self) -> np.ndarray:
        return self.Sx + 1j * self.Sy

    @property
    def Sminus(self) -> np.ndarray:
        return self.Sx - 1j * self.Sy

    @property
    def m_values(self) -> np.ndarray:
        return np.real(np.diag(self.Sz)).copy()

    def index_of(self, m: float) -> int:
        """Basis index of the S_z eigenstate with magnetic quantum number ``m``."""
        hits = np.flatnonzero(np.abs(self.m_values - m) < 1e-12)
        if hits.size != 1:
            raise ValueError(f"m={m} is not a magnetic quantum number of spin {self.j}")
        return int(hits[0])

    def basis_state(self, m: float) -> "StateVector":
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index_of(m)] = 1.0
        return StateVector(amps, self)

    def dot(self, vec) -> np.ndarray:
        """Return ``vec[0]*Sx + vec[1]*Sy + vec[2]*Sz``."""
        vx, vy, vz = vec
        return vx * self.Sx + vy * self.Sy + vz * self.Sz


def make_spin(j) -> SpinRepresentation:
    """Build the spin-j matrices for j = 1/2 or j = 1.

    S_+ has matrix elements <m+1|S_+|m> = sqrt(j(j+1) - m(m+1)); the Cartesian
    components follow from S_x = (S_+ + S_-)/2 and S_y = (S_+ - S_-)/(2i).
    """
    jj = float(_as_spin(j))
    m = jj - np.arange(int(round(2 * jj)) + 1)
    splus = np.zeros((m.size, m.size), dtype=complex)
    for col in range(1, m.size):
        splus[col - 1, col] = np.sqrt(jj * (jj + 1) - m[col] * (m[col] + 1))
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    sz = np.diag(m).astype(complex)
    for mat in (sx, sy, sz):
        mat.setflags(write=False)
    return SpinRepresentation(jj, sx, sy, sz)


class StateVector:
    """Normalized amplitude vector in the S_z eigenbasis of ``rep``."""

    __slots__ = ("amplitudes", "rep")

    def __init__(self, amplitudes, rep: SpinRepresentation, *, atol: float = 1e-12):
        amps = np.array(amplitudes, dtype=complex)
        if amps.shape != (rep.dim,):
            raise ValueError(f"expected {rep.dim} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > atol:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.rep = rep

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self):
        return f"StateVector({self.amplitudes!r}, j={self.rep.j})"

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def spin_vector(self) -> np.ndarray:
        """Expectation values (<Sx>, <Sy>, <Sz>)."""
        r = self.rep
        return np.array([self.expect(s).real for s in (r.Sx, r.Sy, r.Sz)])


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def expm_antihermitian(A, atol: float = 1e-12) -> np.ndarray:
    """Exponentiate an anti-Hermitian matrix via the eigensystem of iA.

    Writing A = -iH with H = iA Hermitian, exp(A) = W diag(exp(-i w)) W^dagger
    where H = W diag(w) W^dagger. Leading axes are treated as a batch.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected a square matrix (or a stack of them)")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    Ah = np.swapaxes(A, -1, -2).conj()
    if np.max(np.abs(A + Ah), initial=0.0) > atol:
        raise ValueError("matrix is not anti-Hermitian")
    H = 0.5j * (A - Ah)
    w, W = np.linalg.eigh(H)
    return (W * np.exp(-1j * w)[..., None, :]) @ np.swapaxes(W, -1, -2).conj()


def rotation_V(beta, rep: SpinRepresentation) -> np.ndarray:
    """Frame operator exp(beta S_+ - conj(beta) S_-).

    With beta = -(theta/2) exp(-i phi) this is a rotation by theta about the
    in-plane axis (-sin phi, cos phi, 0), carrying z-hat onto the direction
    with polar angle theta and azimuth phi. An array of beta gives a stack.
    """
    beta = np.asarray(beta, dtype=complex)
    if not np.all(np.isfinite(beta)):
        raise ValueError(f"beta must be finite, got {beta!r}")
    b = beta[..., None, None]
    return expm_antihermitian(b * rep.Splus - np.conj(b) * rep.Sminus)


def frame_beta(theta, phi):
    """beta = -(theta/2) exp(-i phi) for a direction at angles (theta, phi)."""
    return -0.5 * np.asarray(theta) * np.exp(-1j * np.asarray(phi))
