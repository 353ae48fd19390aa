"""Command-line entry point.

    fiberphase helix-info --pitch 0.02 --radius 0.001 --index 1.5
    fiberphase simulate --theta 60deg --gamma 2 --periods 1 --out run/
    fiberphase verify --out report.json

Exit codes: 0 success, 1 check or runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import (
    DEFAULT_STEPS_PER_PERIOD,
    closed_form_states,
    conditional_initial_state,
    geometric_rate,
    integrate,
    wang_keiji_decompose,
)
from .geometry import (
    SPEED_OF_LIGHT,
    HelixPath,
    HelixSpec,
    effective_field,
    helix_gamma,
    helix_theta_derived,
    read_path_file,
)
from .phases import decompose, solid_angle_phase
from .spin import make_spin
from .verification import run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def parse_angle(text) -> float:
    """Radians by default; a ``deg`` suffix converts from degrees."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    try:
        if s.endswith("deg"):
            return math.radians(float(s[:-3]))
        if s.endswith("rad"):
            s = s[:-3]
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_spin(text) -> float:
    s = str(text).strip()
    if s in ("1/2", "0.5", ".5"):
        return 0.5
    if s in ("1", "1.0"):
        return 1.0
    raise ConfigError(f"spin must be 1/2 or 1, got {text!r}")


def parse_sigma(text) -> int:
    s = str(text).strip()
    if s in ("+1", "1", "+"):
        return 1
    if s in ("-1", "-"):
        return -1
    raise ConfigError(f"sigma must be +1 or -1, got {text!r}")


@dataclass
class RunConfig:
    spin_j: float = 1.0
    sigma: int = 1
    theta: float | None = None
    gamma: float | None = None
    pitch: float | None = None
    radius: float | None = None
    index: float = 1.0
    handedness: int = 1
    path_file: str | None = None
    gamma_convention: str = "paper"
    periods: float | None = None
    duration: float | None = None
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD
    samples_per_period: int = 200
    out: str | None = None

    @property
    def source(self) -> str:
        if self.path_file is not None:
            return "file"
        if self.pitch is not None or self.radius is not None:
            return "physical"
        return "angles"

    def validate(self, theta_required: bool = True) -> "RunConfig":
        if self.gamma_convention not in ("paper", "derived"):
            raise ConfigError("gamma-convention must be 'paper' or 'derived'")
        src = self.source
        if src == "file" and any(
            v is not None for v in (self.theta, self.gamma, self.pitch, self.radius)
        ):
            raise ConfigError("--path-file cannot be combined with helix parameters")
        if src == "physical":
            if self.pitch is None or self.radius is None:
                raise ConfigError("a physical helix needs both --pitch and --radius")
            if self.gamma is not None:
                raise ConfigError("--gamma conflicts with --pitch/--radius (gamma is derived)")
            if theta_required and self.gamma_convention == "paper" and self.theta is None:
                raise ConfigError("the paper gamma convention needs --theta for a physical helix")
            if self.gamma_convention == "derived" and self.theta is not None:
                raise ConfigError("--theta is derived from pitch and radius under 'derived'")
        if src == "angles" and (self.theta is None or self.gamma is None):
            raise ConfigError("give exactly one path source: --theta/--gamma, "
                              "--pitch/--radius, or --path-file")
        if self.periods is not None and self.duration is not None:
            raise ConfigError("give --periods or --duration, not both")
        for name in ("periods", "duration"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if self.steps_per_period < 100:
            raise ConfigError("--steps-per-period must be at least 100")
        if self.samples_per_period < 1:
            raise ConfigError("--samples-per-period must be positive")
        return self


_CONVERTERS = {
    "spin_j": parse_spin,
    "sigma": parse_sigma,
    "theta": parse_angle,
    "gamma": float,
    "pitch": float,
    "radius": float,
    "index": float,
    "handedness": parse_sigma,
    "path_file": str,
    "gamma_convention": str,
    "periods": float,
    "duration": float,
    "steps_per_period": int,
    "samples_per_period": int,
    "out": str,
}
_ALIASES = {"spin": "spin_j", "j": "spin_j", "steps": "steps_per_period"}


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(args: argparse.Namespace, theta_required: bool = True) -> RunConfig:
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            raw[f.name] = v
    try:
        kwargs = {k: _CONVERTERS[k](v) for k, v in raw.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(**kwargs).validate(theta_required)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_summary(path, items: dict) -> None:
    Path(path).write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in items.items()))


# --------------------------------------------------------------------------
# helix-info
# --------------------------------------------------------------------------


def helix_info(cfg: RunConfig) -> dict:
    m = cfg.sigma * cfg.spin_j
    info: dict = {}
    if cfg.source == "physical":
        spec = HelixSpec(d=cfg.pitch, a=cfg.radius, n=cfg.index, handedness=cfg.handedness)
        info["gamma_paper"] = helix_gamma(spec, SPEED_OF_LIGHT, "paper")
        info["gamma_derived"] = helix_gamma(spec, SPEED_OF_LIGHT, "derived")
        info["theta_derived"] = helix_theta_derived(spec)
        gamma = info[f"gamma_{cfg.gamma_convention}"]
        theta = cfg.theta if cfg.theta is not None else info["theta_derived"]
    elif cfg.source == "angles":
        theta, gamma = cfg.theta, cfg.gamma
    else:
        raise ConfigError("helix-info needs helix parameters, not a path file")
    info.update(gamma_convention=cfg.gamma_convention, theta=theta, gamma=gamma, m=m,
                sigma=cfg.sigma)
    try:
        wk = wang_keiji_decompose(theta, gamma)
        info.update(omega1=wk.omega1, omega0=wk.omega0, wang_keiji_residual=wk.residual)
    except ValueError as exc:
        info["wang_keiji"] = f"undefined ({exc})"
    info["geometric_phase_per_turn"] = m * 2 * math.pi * (1 - math.cos(theta))
    return info


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------


def _resolve_path(cfg: RunConfig):
    if cfg.source == "file":
        return read_path_file(cfg.path_file)
    if cfg.source == "physical":
        spec = HelixSpec(d=cfg.pitch, a=cfg.radius, n=cfg.index, handedness=cfg.handedness)
        gamma = helix_gamma(spec, SPEED_OF_LIGHT, cfg.gamma_convention)
        theta = cfg.theta if cfg.theta is not None else helix_theta_derived(spec)
        return HelixPath(theta, gamma)
    return HelixPath(cfg.theta, cfg.gamma)


def simulate(cfg: RunConfig) -> dict:
    """Run one propagation and write trajectory, phase and summary files."""
    rep = make_spin(cfg.spin_j)
    m = cfg.sigma * rep.j
    path = _resolve_path(cfg)
    field = effective_field(path)

    if isinstance(path, HelixPath):
        if path.gamma == 0:
            raise ConfigError("gamma = 0 has no period; nothing to simulate")
        period = path.period
        duration = cfg.duration if cfg.duration is not None else (cfg.periods or 1.0) * period
        n_out = max(1, int(math.ceil(duration / period * cfg.samples_per_period)))
        t_grid = np.linspace(0.0, duration, n_out + 1)
        step = period / cfg.steps_per_period
        theta0, phi0 = path.theta, 0.0
    else:
        t0, t1 = path.domain
        if cfg.periods is not None:
            raise ConfigError("--periods is undefined for a sampled path; use --duration")
        t_end = t1 if cfg.duration is None else t0 + cfg.duration
        if t_end > t1 * (1 + 1e-12) + 1e-300:
            raise ConfigError(f"duration exceeds the sampled path ({t1 - t0} s)")
        t_grid = path.times[path.times <= t_end]
        rate = float(np.max(np.linalg.norm(field(path.times), axis=1)))
        step = (2 * math.pi / rate / cfg.steps_per_period) if rate > 0 else (t_end - t0) / 1000
        th, ph, _, _ = path.angles(t0)
        theta0, phi0 = float(th), float(ph)

    psi0 = conditional_initial_state(m, theta0, rep, phi0)
    result = integrate(field, rep, psi0, t_grid, step)
    dec = decompose(result, path, m)
    predicted = solid_angle_phase(path, m, t_grid)

    summary = {
        "spin_j": rep.j,
        "sigma": cfg.sigma,
        "m": m,
        "path_kind": "helix" if isinstance(path, HelixPath) else "sampled",
        "theta_initial": theta0,
        "duration": float(t_grid[-1] - t_grid[0]),
        "step": step,
        "n_steps": result.n_steps,
        "n_samples": int(t_grid.size),
    }
    if isinstance(path, HelixPath):
        exact, _ = closed_form_states(m, path.theta, path.gamma, rep, t_grid)
        summary.update(
            theta=path.theta,
            gamma=path.gamma,
            gamma_convention=cfg.gamma_convention,
            predicted_geometric=geometric_rate(m, path.theta, path.gamma) * float(t_grid[-1]),
            closed_form_deviation=float(np.max(np.linalg.norm(result.states - exact, axis=1))),
        )
    summary.update(
        phase_total=float(dec.total_frame[-1]),
        phase_dynamical=float(dec.dynamical[-1]),
        phase_geometric=float(dec.geometric[-1]),
        phase_solid_angle=float(predicted[-1]),
        geometric_minus_solid_angle=float(np.max(np.abs(dec.geometric - predicted))),
        pancharatnam_final=float(dec.pancharatnam[-1]),
        helicity_initial=float(result.helicity[0]),
        helicity_drift=result.helicity_drift,
        norm_drift=result.norm_drift,
    )

    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        labels = [_m_label(mv) for mv in rep.m_values]
        header = (["t"] + [f"re_{l}" for l in labels] + [f"im_{l}" for l in labels]
                  + ["helicity", "norm", "phase_total", "phase_dyn", "phase_geo"])
        traj = np.column_stack([
            t_grid, result.states.real, result.states.imag, result.helicity,
            np.linalg.norm(result.states, axis=1), dec.total_frame, dec.dynamical,
            dec.geometric,
        ])
        np.savetxt(out / "trajectory.csv", traj, delimiter=",", header=",".join(header),
                   comments="", fmt="%.17g")
        phases = np.column_stack([
            t_grid, dec.total_frame, dec.dynamical, dec.geometric, predicted,
            dec.pancharatnam, dec.pancharatnam_unwrapped,
        ])
        np.savetxt(out / "phases.csv", phases, delimiter=",",
                   header="t,phase_total,phase_dyn,phase_geo,phase_solid_angle,"
                          "pancharatnam,pancharatnam_unwrapped",
                   comments="", fmt="%.17g")
        write_summary(out / "summary.txt", summary)
    return summary


def _m_label(m: float) -> str:
    if abs(m - round(m)) < 1e-12:
        mi = int(round(m))
        return f"m{mi:+d}" if mi else "m0"
    return f"m{'+' if m > 0 else '-'}{int(round(abs(2 * m)))}/2"


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file (flags override it)")
    p.add_argument("--theta", help="polar angle of the wave vector (radians, or e.g. 60deg)")
    p.add_argument("--gamma", help="azimuthal rotation rate (rad/s)")
    p.add_argument("--pitch", help="helix pitch length d (m)")
    p.add_argument("--radius", help="helix radius a (m)")
    p.add_argument("--index", help="refractive index n")
    p.add_argument("--handedness", help="+1 or -1")
    p.add_argument("--sigma", help="helicity label +1 or -1")
    p.add_argument("--spin", dest="spin_j", help="spin quantum number 1/2 or 1 (default 1)")
    p.add_argument("--periods", help="duration in helix periods")
    p.add_argument("--duration", help="duration in seconds")
    p.add_argument("--steps-per-period", dest="steps_per_period", help="RK4 steps per period")
    p.add_argument("--samples-per-period", dest="samples_per_period",
                   help="output samples per period (helix runs)")
    p.add_argument("--path-file", dest="path_file", help="sampled path (t,x,y,z or t,theta,phi)")
    p.add_argument("--gamma-convention", dest="gamma_convention", choices=("paper", "derived"))
    p.add_argument("--out", help="output directory (simulate) or report file (verify)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fiberphase", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_options(sub.add_parser("helix-info", help="helix rates, angles and parameters"))
    _add_run_options(sub.add_parser("simulate", help="propagate one path and extract phases"))
    v = sub.add_parser("verify", help="run the invariant suite over the built-in sweep")
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("--periods", type=float, default=10.0)
    v.add_argument("--steps-per-period", dest="steps_per_period", type=int,
                   default=DEFAULT_STEPS_PER_PERIOD)
    v.add_argument("--random-paths", dest="random_paths", type=int, default=5)
    v.add_argument("--corrupt-epsilon", dest="corrupt_epsilon", type=float, default=0.0,
                   help="add eps*rate*Sz to every Hamiltonian (mutation test)")
    v.add_argument("--quiet", action="store_true", help="print failures and the verdict only")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            if args.steps_per_period < 100 or args.periods <= 0:
                raise ConfigError("need --periods > 0 and --steps-per-period >= 100")
            report = run_verify(periods=args.periods, steps_per_period=args.steps_per_period,
                                n_random=args.random_paths,
                                corrupt_epsilon=args.corrupt_epsilon)
            for c in report.checks:
                if not args.quiet or not c.passed:
                    print(c.line())
            print(f"{'PASS' if report.passed else 'FAIL'}: {len(report.checks)} checks, "
                  f"{len(report.failures)} failed")
            if args.out:
                Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
            return EXIT_OK if report.passed else EXIT_FAIL

        cfg = build_config(args, theta_required=args.command != "helix-info")
        if args.command == "helix-info":
            items = helix_info(cfg)
        else:
            items = simulate(cfg)
        for k, v in items.items():
            print(f"{k} = {_fmt(v)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"fiberphase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"fiberphase: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
