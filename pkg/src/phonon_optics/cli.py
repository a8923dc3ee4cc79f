"""Command-line front end.

Exit codes: 0 every check passed, 1 a check failed, 2 usage or config error.
CSV output starts with one ``#`` comment line naming the tool version and
the SHA-256 of the config file, followed by a header row.  Floats are
written as ``%.11e`` (twelve significant digits), so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
from dataclasses import MISSING, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import RegimeInputs, extract_mode_transform, regime_report, rwa_scan
from .elements import (
    InternalPrep,
    cnot_truth_table,
    decoupling_check,
    element_propagator,
    pauli_x_gate,
    pauli_z_gate,
    relative_phase,
    required_prep,
)
from .evolution import IntegratorSpec
from .fock import ModeId, ModeLayout
from .hamiltonians import ElementKind, TrapBeamConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TRANSFORM_TOL = 1e-8
FIT_UNITARITY_TOL = 1e-6
PURITY_TOL = 1e-10
CONSERVATION_TOL = 1e-10
UNITARITY_TOL = 1e-10
FIDELITY_TOL = 1e-10
PHASE_TOL = 1e-8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a config file can set; SI units throughout."""

    m: float
    w0: float
    mu_x: float
    mu_y: float
    nu_x: float
    nu_y: float
    omega0: float
    Omega: float
    ell: int = 2
    pol_sign: int = 1
    n_max: int = 4
    n_safe: int | None = None
    steps: int | None = None
    lifetime: float | None = None
    damping_time: float | None = None
    distance: float | None = None
    n_principal: int | None = None

    @property
    def trap(self) -> TrapBeamConfig:
        return TrapBeamConfig(
            m=self.m, w0=self.w0, mu_x=self.mu_x, mu_y=self.mu_y, nu_x=self.nu_x,
            nu_y=self.nu_y, omega0=self.omega0, Omega=self.Omega, ell=self.ell,
            pol_sign=self.pol_sign,
        )

    @property
    def layout(self) -> ModeLayout:
        return ModeLayout(self.n_max)

    @property
    def regime(self) -> RegimeInputs:
        return RegimeInputs(self.lifetime, self.damping_time, self.distance, self.n_principal)


_INT_KEYS = {"ell", "pol_sign", "n_max", "n_safe", "steps", "n_principal"}
_POSITIVE = {"m", "w0", "mu_x", "mu_y", "nu_x", "nu_y", "omega0", "lifetime", "damping_time", "distance"}
_KEYS = {f.name for f in fields(RunConfig)}
_REQUIRED = [f.name for f in fields(RunConfig) if f.default is MISSING]


def parse_config(path) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from None
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} (first set on line {where[key]})")
        try:
            number = int(value) if key in _INT_KEYS else float(value)
        except ValueError:
            kind = "an integer" if key in _INT_KEYS else "a number"
            raise ConfigError(f"{path}:{lineno}: {key} must be {kind}, got {value!r}") from None
        if key in _POSITIVE and not (number > 0 and math.isfinite(number)):
            raise ConfigError(f"{path}:{lineno}: {key} must be positive, got {value}")
        values[key], where[key] = number, lineno
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{path}: missing required key(s): {', '.join(missing)}")
    if values.get("n_max", 4) < 2:
        raise ConfigError(f"{path}:{where['n_max']}: n_max must be >= 2, got {values['n_max']}")
    cfg = RunConfig(**values)
    try:
        cfg.trap
        ModeLayout(cfg.n_max)
        if cfg.n_safe is not None and not 0 <= cfg.n_safe <= cfg.n_max:
            raise ValueError(f"n_safe must lie in 0..n_max, got {cfg.n_safe}")
        if cfg.steps is not None:
            IntegratorSpec(steps=cfg.steps)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


# -- output -----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.11e}"
    return "" if x is None else str(x)


def _csv(command: str, config_path, header, rows) -> str:
    digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    buf = io.StringIO()
    buf.write(f"# phonon-optics {__version__} {command} config-sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# -- commands ---------------------------------------------------------------


def _check(rows, name, value, tol, ok):
    rows.append((name, float(value), float(tol), bool(ok)))


def verify_rows(kind: ElementKind, cfg: RunConfig, theta=None, k: int = 1, prep: InternalPrep | None = None):
    """Checks behind ``verify-element``: ``(check_name, value, tolerance, pass)``."""
    kind = ElementKind(kind)
    trap, layout = cfg.trap, cfg.layout
    prep = prep or required_prep(kind)
    if kind.is_hwp and theta is None:
        theta = math.pi / 4
    n_safe = cfg.n_safe if cfg.n_safe is not None else layout.n_max - 2
    rows = []
    U = element_propagator(kind, trap, layout, theta=theta, k=k)
    _check(rows, "propagator_unitarity", U.unitarity_error(), UNITARITY_TOL, U.unitarity_error() < UNITARITY_TOL)

    def fit(modes, expected):
        rep = extract_mode_transform(U, modes, prep, layout, n_safe)
        err = float(np.max(np.abs(np.abs(rep.coefficients) - np.abs(expected)))) if expected is not None else 0.0
        return rep, err

    if kind is ElementKind.PBS:
        rep, err = fit([ModeId.CM_Y, ModeId.BR_Y], np.array([[0, 1], [1, 0]]))
        _check(rows, "y_modes_swap_magnitudes", err, TRANSFORM_TOL, err < TRANSFORM_TOL)
        reps = [rep]
        rep, err = fit([ModeId.CM_X, ModeId.BR_X], None)
        err = float(np.max(np.abs(rep.coefficients - np.eye(2))))
        _check(rows, "x_modes_identity", err, TRANSFORM_TOL, err < TRANSFORM_TOL)
        reps.append(rep)
    elif kind.is_hwp:
        modes = [ModeId.CM_X, ModeId.CM_Y] if kind is ElementKind.HWP_CM else [ModeId.BR_X, ModeId.BR_Y]
        c, s = math.cos(2 * theta), trap.pol_sign * math.sin(2 * theta)
        rep, _ = fit(modes, None)
        err = float(np.max(np.abs(rep.coefficients - np.array([[c, -1j * s], [-1j * s, c]]))))
        _check(rows, "rotation_coefficients", err, TRANSFORM_TOL, err < TRANSFORM_TOL)
        reps = [rep]
    else:
        modes = [ModeId.CM_X, ModeId.CM_Y] if kind is ElementKind.QWP_CM else [ModeId.BR_X, ModeId.BR_Y]
        rep, err = fit(modes, np.eye(2))
        _check(rows, "diagonal_magnitudes", err, TRANSFORM_TOL, err < TRANSFORM_TOL)
        c = rep.coefficients
        phase = float(np.angle(c[0, 0] * np.conj(c[1, 1]) * np.exp(-0.5j * math.pi * k)))
        _check(rows, "relative_phase_error", abs(phase), PHASE_TOL, abs(phase) < PHASE_TOL)
        reps = [rep]
    residual = max(r.residual for r in reps)
    _check(rows, "fit_residual", residual, TRANSFORM_TOL, residual < TRANSFORM_TOL)
    unit = max(r.unitarity_error() for r in reps)
    _check(rows, "fit_unitarity", unit, FIT_UNITARITY_TOL, unit < FIT_UNITARITY_TOL)

    trace = decoupling_check(kind, trap, prep, n_samples=21, layout=layout, theta=theta, k=k)
    loss = 1.0 - trace.min_purity
    _check(rows, "decoupling_purity_loss", loss, PURITY_TOL, loss < PURITY_TOL)
    for name, drift in trace.drift.items():
        _check(rows, f"conserved_{name}", drift, CONSERVATION_TOL, drift < CONSERVATION_TOL)
    return rows


def cmd_verify_element(args) -> int:
    cfg = parse_config(args.config)
    prep = InternalPrep(args.prep) if args.prep else None
    rows = verify_rows(ElementKind(args.kind), cfg, theta=args.theta, k=args.k, prep=prep)
    _emit(_csv("verify-element", args.config, ["check_name", "value", "tolerance", "pass"], rows), args.out)
    return EXIT_OK if all(r[3] for r in rows) else EXIT_FAIL


def truth_table_rows(gate: str, cfg: RunConfig):
    """Matrix rows ``(row, col, magnitude, phase)`` then summary rows, and the verdict."""
    trap, layout = cfg.trap, cfg.layout
    if gate == "cnot":
        rep = cnot_truth_table(trap, layout)
    elif gate == "x":
        rep = pauli_x_gate(trap, layout)
    else:
        rep = pauli_z_gate(trap, layout, k=2 if gate == "z" else 1)
    rows = []
    n = rep.matrix.shape[0]
    for i in range(n):
        for j in range(n):
            rows.append((i, j, float(rep.magnitudes[i, j]), float(rep.phases[i, j])))
    ok = rep.pattern_matches and rep.permutation_fidelity >= 1 - FIDELITY_TOL and rep.max_leakage < FIDELITY_TOL
    rows.append(("permutation_fidelity", None, rep.permutation_fidelity, None))
    rows.append(("max_leakage", None, rep.max_leakage, None))
    rows.append(("global_phase", None, None, rep.global_phase))
    if gate in ("z", "s"):
        rel = relative_phase(rep)
        want = math.pi if gate == "z" else math.pi / 2
        ok = ok and abs(abs(rel) - want) < PHASE_TOL
        rows.append(("relative_phase", None, None, rel))
    return rows, ok


def cmd_truth_table(args) -> int:
    cfg = parse_config(args.config)
    rows, ok = truth_table_rows(args.gate, cfg)
    _emit(_csv("truth-table", args.config, ["row", "col", "magnitude", "phase"], rows), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _parse_omegas(text: str) -> list[float]:
    try:
        omegas = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--omegas must be a comma-separated list of numbers, got {text!r}") from None
    if len(set(omegas)) < 2:
        raise ConfigError("--omegas needs at least two distinct scan points")
    if any(not (w > 0 and math.isfinite(w)) for w in omegas):
        raise ConfigError("--omegas values must be positive")
    return omegas


def cmd_rwa_scan(args) -> int:
    omegas = _parse_omegas(args.omegas)
    cfg = parse_config(args.config)
    spec = IntegratorSpec(steps=cfg.steps, scheme="cf4") if cfg.steps else None
    result = rwa_scan(
        cfg.trap, ElementKind(args.kind), omegas, integrator=spec,
        layout=ModeLayout(args.n_max), theta=args.theta, k=args.k,
    )
    rows = [(r.omega, r.gap, r.ratio, r.infidelity, r.converged) for r in result.rows]
    _emit(_csv("rwa-scan", args.config, ["omega", "gap", "ratio", "infidelity", "converged"], rows), args.out)
    if not result.all_converged:
        print("rwa-scan: some points did not converge (converged=false)", file=sys.stderr)
        return EXIT_FAIL
    if result.degenerate:
        print("rwa-scan: degenerate laser frequencies; monotonicity check skipped", file=sys.stderr)
        return EXIT_OK
    if not result.monotone:
        print("rwa-scan: infidelity is not strictly decreasing with Omega", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_regime(args) -> int:
    cfg = parse_config(args.config)
    report = regime_report(cfg.trap, cfg.regime)
    rows = [(c.name, c.value, c.limit, c.ratio, c.passed if c.passed is not None else "skipped") for c in report.checks]
    _emit(_csv("regime", args.config, ["check_name", "value", "limit", "ratio", "pass"], rows), args.out)
    return EXIT_OK if report.all_pass else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phonon-optics", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in ElementKind]

    v = sub.add_parser("verify-element", help="mode transform, decoupling and conservation checks")
    v.add_argument("--kind", required=True, choices=kinds)
    v.add_argument("--theta", type=float, help="HWP angle in rad (default pi/4)")
    v.add_argument("--k", type=int, default=1, help="QWP duration multiple")
    v.add_argument("--prep", choices=[p.value for p in InternalPrep], help="override the internal preparation")
    v.set_defaults(func=cmd_verify_element)

    t = sub.add_parser("truth-table", help="logical matrix of a gate")
    t.add_argument("--gate", required=True, choices=["cnot", "x", "z", "s"])
    t.set_defaults(func=cmd_truth_table)

    r = sub.add_parser("rwa-scan", help="full model against effective Hamiltonian")
    r.add_argument("--omegas", required=True, help="comma-separated Rabi couplings in rad/s")
    r.add_argument("--kind", default="pbs", choices=kinds)
    r.add_argument("--n-max", type=int, default=3, help="phonon cutoff for the scan (default 3)")
    r.add_argument("--theta", type=float)
    r.add_argument("--k", type=int, default=1)
    r.set_defaults(func=cmd_rwa_scan)

    g = sub.add_parser("regime", help="element durations against lifetime, damping and dipole coupling")
    g.set_defaults(func=cmd_regime)

    for s in (v, t, r, g):
        s.add_argument("--config", required=True, help="key = value config file")
        s.add_argument("--out", help="CSV destination (default stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
