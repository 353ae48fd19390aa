"""Invariant checks over a parameter sweep, shared by the ``verify`` command."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolution import (
    DEFAULT_STEPS_PER_PERIOD,
    closed_form_states,
    conditional_initial_state,
    geometric_rate,
    integrate,
    wang_keiji_decompose,
)
from .geometry import HelixPath, SampledPath, check_motion_identity, effective_field
from .phases import decompose, solid_angle_phase
from .spin import make_spin

SWEEP_THETA = (math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2.5)
SWEEP_GAMMA = (0.5, 1.0, 2.0)
SWEEP_SIGMA = (1, -1)
SWEEP_SPIN = (0.5, 1.0)

TOL_ORACLE = 1e-8
TOL_DYNAMICAL = 1e-9  # times rate * t
TOL_HELICITY = 1e-8
TOL_GEOMETRIC = 1e-8
TOL_NORM = 1e-10
TOL_WANG_KEIJI = 1e-12  # times gamma^2
TOL_MOTION = 1e-10
TOL_SOLID_ANGLE = 1e-6


@dataclass
class CheckResult:
    name: str
    params: dict
    value: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        p = " ".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{tag} {self.name} [{p}] value={self.value:.3e} tol={self.tolerance:.1e}"


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _check(name, params, value, tol) -> CheckResult:
    value = float(value)
    return CheckResult(name, dict(params), value, tol, bool(value <= tol))


class ShiftedField:
    """A field with a constant vector added; used to corrupt a Hamiltonian on purpose."""

    def __init__(self, base, shift):
        self.base = base
        self.shift = np.asarray(shift, dtype=float)

    def __call__(self, t):
        return self.base(t) + self.shift

    def k_hat(self, t):
        return self.base.k_hat(t)

    @property
    def domain(self):
        return self.base.domain


def random_smooth_path(rng: np.random.Generator, duration: float = 20.0,
                       n: int = 4001) -> SampledPath:
    """Sampled path with both theta(t) and phi(t) varying smoothly."""
    t = np.linspace(0.0, duration, n)
    w = 2 * math.pi / duration
    theta = 1.2 + 0.5 * np.sin(rng.uniform(1, 3) * w * t + rng.uniform(0, 2 * math.pi))
    theta += 0.2 * np.sin(rng.uniform(3, 5) * w * t + rng.uniform(0, 2 * math.pi))
    phi = rng.uniform(0.5, 2.0) * t + 0.8 * np.sin(
        rng.uniform(1, 4) * w * t + rng.uniform(0, 2 * math.pi))
    return SampledPath(t, theta, phi)


def helix_checks(theta, gamma, sigma, j, periods=10.0, steps_per_period=DEFAULT_STEPS_PER_PERIOD,
                 corrupt_epsilon=0.0, samples_per_period=100):
    rep = make_spin(j)
    m = sigma * rep.j
    path = HelixPath(theta, gamma)
    fld = effective_field(path)
    if corrupt_epsilon:
        fld = ShiftedField(fld, (0.0, 0.0, corrupt_epsilon * gamma))
    period = path.period
    t_grid = np.linspace(0.0, periods * period, int(round(periods * samples_per_period)) + 1)
    psi0 = conditional_initial_state(m, theta, rep)
    res = integrate(fld, rep, psi0, t_grid, period / steps_per_period)
    exact, _ = closed_form_states(m, theta, gamma, rep, t_grid)
    dec = decompose(res, path, m)
    params = dict(theta=theta, gamma=gamma, sigma=sigma, j=rep.j)
    t_safe = np.where(t_grid > 0, t_grid, np.inf)
    return [
        _check("oracle_equivalence", params,
               np.max(np.linalg.norm(res.states - exact, axis=1)), TOL_ORACLE),
        _check("dynamical_phase_vanishes", params,
               np.max(np.abs(dec.dynamical) / (abs(gamma) * t_safe)), TOL_DYNAMICAL),
        _check("helicity_conservation", params, res.helicity_drift, TOL_HELICITY),
        _check("geometric_phase_law", params,
               np.max(np.abs(dec.geometric - geometric_rate(m, theta, gamma) * t_grid)),
               TOL_GEOMETRIC),
        _check("norm_drift", params, res.norm_drift, TOL_NORM),
    ]


def geometry_checks(theta, gamma):
    params = dict(theta=theta, gamma=gamma)
    wk = wang_keiji_decompose(theta, gamma)
    path = HelixPath(theta, gamma)
    grid = np.linspace(0.0, 10 * path.period, 2001)
    return [
        _check("wang_keiji_residual", params, abs(wk.residual) / gamma ** 2, TOL_WANG_KEIJI),
        _check("motion_identity", params,
               check_motion_identity(path, grid).max_residual, TOL_MOTION),
    ]


def sampled_checks(seed, j=1.0, step=1e-3, corrupt_epsilon=0.0):
    rng = np.random.default_rng(seed)
    rep = make_spin(j)
    m = rep.j
    path = random_smooth_path(rng)
    fld = effective_field(path)
    t_grid = path.times[::10]
    rate = float(np.max(np.linalg.norm(fld(path.times), axis=1)))
    if corrupt_epsilon:
        fld = ShiftedField(fld, (0.0, 0.0, corrupt_epsilon * rate))
    th0, ph0, _, _ = path.angles(t_grid[0])
    psi0 = conditional_initial_state(m, float(th0), rep, float(ph0))
    res = integrate(fld, rep, psi0, t_grid, step)
    dec = decompose(res, path, m)
    predicted = solid_angle_phase(path, m, t_grid)
    elapsed = t_grid - t_grid[0]
    params = dict(path=f"random-{seed}", j=rep.j)
    return [
        _check("dynamical_phase_vanishes", params,
               np.max(np.abs(dec.dynamical[1:]) / (rate * elapsed[1:])), TOL_DYNAMICAL),
        _check("helicity_conservation", params, res.helicity_drift, TOL_HELICITY),
        _check("solid_angle_consistency", params,
               np.max(np.abs(dec.geometric - predicted)), TOL_SOLID_ANGLE),
    ]


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures),
            "checks": [asdict(c) for c in self.checks],
        }


def run_verify(thetas=SWEEP_THETA, gammas=SWEEP_GAMMA, sigmas=SWEEP_SIGMA, spins=SWEEP_SPIN,
               periods=10.0, steps_per_period=DEFAULT_STEPS_PER_PERIOD, n_random=5,
               corrupt_epsilon=0.0) -> VerifyReport:
    """Run every invariant over the sweep; ``corrupt_epsilon`` adds eps*rate*Sz to H."""
    report = VerifyReport()
    for theta, gamma in itertools.product(thetas, gammas):
        report.checks += geometry_checks(theta, gamma)
        for sigma, j in itertools.product(sigmas, spins):
            report.checks += helix_checks(theta, gamma, sigma, j, periods, steps_per_period,
                                          corrupt_epsilon=corrupt_epsilon)
    for seed in range(n_random):
        for j in spins:
            report.checks += sampled_checks(seed, j, corrupt_epsilon=corrupt_epsilon)
    return report
