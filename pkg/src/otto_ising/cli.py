"""Command-line front end: run cycles and sweeps, emit CSV/JSON for plotting.

Subcommands
    cycle          one cycle, full energy bookkeeping and metrics (JSON)
    cycles         repeated cycles with finite bath contact, per-cycle CSV
    phase-diagram  regime classification over the (h_i, T_c) plane (CSV)
                   plus regime boundary polylines (JSON)
    curves         an observable vs h_i for several chain sizes (CSV)
    scaling        peak heights vs size and the power-law fit (JSON)
    velocity       an observable vs h_i for several ramp velocities (CSV)

Configuration comes from an INI-style file (section [common] plus one
section per subcommand) with command-line flags overriding file values.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.  Output
files use 15 significant digits and a fixed row order, so identical
configurations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .analysis import (
    OBSERVABLES,
    Grid2D,
    extract_regime_boundary,
    find_peaks,
    fit_power_law,
    resolve_threads,
    sweep_observable,
    sweep_regime_map,
    velocity_scan,
)
from .chain_model import ChainSpec, DiagonalizationError
from .dynamics import IntegrationError
from .oracle import MAX_QUENCH_SITES, exact_cycle
from .otto_engine import (
    ConvergenceError,
    CycleSpec,
    ForbiddenRegime,
    MarginalSign,
    Regime,
    engine_metrics,
    run_cycles_partial,
    stationary_cycle,
)
from .thermal_bath import BathSpec

COMMANDS = ("cycle", "cycles", "phase-diagram", "curves", "scaling", "velocity")

_COMMON_KEYS = {"n_sites", "coupling", "v", "t_c", "t_h", "threads", "out"}
_SECTION_KEYS = {
    "common": _COMMON_KEYS,
    "cycle": _COMMON_KEYS | {"h_i", "h_f", "jt", "oracle"},
    "cycles": _COMMON_KEYS | {"h_i", "h_f", "jt", "n_cyc"},
    "phase-diagram": _COMMON_KEYS | {"delta_h", "h_min", "h_max", "n_h", "t_min", "t_max", "n_t"},
    "curves": _COMMON_KEYS | {"observable", "sizes", "delta_h", "h_min", "h_max", "h_step"},
    "scaling": _COMMON_KEYS | {"observable", "sizes", "delta_h", "h_min", "h_max", "h_step"},
    "velocity": _COMMON_KEYS
    | {"observable", "velocities", "delta_h", "h_min", "h_max", "h_step"},
}


class ConfigError(ValueError):
    """Bad flags, bad config file, or a violated parameter constraint."""


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as configuration errors."""

    def error(self, message: str):
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one CLI invocation."""

    command: str
    n_sites: int
    coupling: float
    v: float
    t_c: float
    t_h: float
    threads: int
    out: str
    h_i: float | None = None
    h_f: float | None = None
    jt: float | str = "complete"
    n_cyc: int | None = None
    oracle: bool = False
    delta_h: float | None = None
    h_min: float | None = None
    h_max: float | None = None
    h_step: float | None = None
    n_h: int | None = None
    t_min: float | None = None
    t_max: float | None = None
    n_t: int | None = None
    observable: str | None = None
    sizes: tuple[int, ...] | None = None
    velocities: tuple[float, ...] | None = None


def _build_parser() -> _Parser:
    parser = _Parser(prog="otto-ising", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="|".join(COMMANDS))

    def _common(p: _Parser) -> None:
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--out", help="output directory (default: current directory)")
        p.add_argument("--threads", type=int, help="worker pool size")
        p.add_argument("--n-sites", type=int, help="chain length N")
        p.add_argument("--v", type=float, help="ramp velocity")
        p.add_argument("--t-c", type=float, help="cold bath temperature")
        p.add_argument("--t-h", type=float, help="hot bath temperature")

    p_cycle = sub.add_parser("cycle", help="run one cycle and write cycle.json")
    _common(p_cycle)
    p_cycle.add_argument("--h-i", type=float, help="initial field")
    p_cycle.add_argument("--h-f", type=float, help="final field")
    p_cycle.add_argument("--jt", help="bath contact strength, or 'complete'")
    p_cycle.add_argument("--oracle", action="store_true", default=None,
                         help="cross-check against the dense reference (N <= 10)")

    p_cycles = sub.add_parser("cycles", help="run repeated cycles and write cycles.csv")
    _common(p_cycles)
    p_cycles.add_argument("--h-i", type=float, help="initial field")
    p_cycles.add_argument("--h-f", type=float, help="final field")
    p_cycles.add_argument("--jt", help="bath contact strength, or 'complete'")
    p_cycles.add_argument("--n-cyc", type=int, help="number of cycles")

    p_phase = sub.add_parser("phase-diagram", help="classify regimes over (h_i, T_c)")
    _common(p_phase)
    p_phase.add_argument("--delta-h", type=float, help="field span h_f - h_i per cell")

    for name in ("curves", "scaling", "velocity"):
        p = sub.add_parser(name)
        _common(p)
        p.add_argument("--delta-h", type=float, help="field span h_f - h_i")
        p.add_argument("--observable", choices=OBSERVABLES)
        p.add_argument("--h-min", type=float, help="sweep start for h_i")
        p.add_argument("--h-max", type=float, help="sweep end for h_i")
        p.add_argument("--h-step", type=float, help="sweep step for h_i")
        if name in ("curves", "scaling"):
            p.add_argument("--sizes", help="comma-separated chain sizes")
        else:
            p.add_argument("--velocities", help="comma-separated ramp velocities")

    return parser


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    if math.isnan(value):
        raise ConfigError(f"invalid value for {key}: {raw!r}")
    return value


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"invalid boolean: {raw!r}")


def _parse_jt(raw: str) -> float | str:
    if raw.strip().lower() == "complete":
        return "complete"
    value = _parse_float("jt", raw)
    if value < 0:
        raise ConfigError("jt >= 0 required")
    return value


def _parse_sizes(raw: str) -> tuple[int, ...]:
    sizes = tuple(_parse_int("sizes", part) for part in raw.split(",") if part.strip())
    if not sizes:
        raise ConfigError("sizes must be a nonempty comma-separated list")
    return sizes


def _parse_velocities(raw: str) -> tuple[float, ...]:
    vels = tuple(_parse_float("velocities", part) for part in raw.split(",") if part.strip())
    if not vels:
        raise ConfigError("velocities must be a nonempty comma-separated list")
    return vels


def _read_config_file(path: str, command: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None
    unknown = []
    for section in parser.sections():
        allowed = _SECTION_KEYS.get(section)
        if allowed is None:
            unknown.append(f"[{section}]")
            continue
        unknown.extend(f"[{section}] {key}" for key in parser[section] if key not in allowed)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    merged: dict[str, str] = {}
    for section in ("common", command):
        if parser.has_section(section):
            merged.update(parser[section])
    return merged


def _resolve_cli_threads(value: int | None) -> int:
    """Flag/file value, else the env fallback, else the machine's core count."""
    if value is not None:
        if value < 1:
            raise ConfigError("threads >= 1 required")
        return value
    if os.environ.get("OTTO_ISING_THREADS", "").strip():
        try:
            return resolve_threads(None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return os.cpu_count() or 1


_DEFAULT_H_I = 0.75
_DEFAULT_SWEEP = {"h_min": 0.5, "h_max": 2.0, "h_step": 0.02}


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Parse flags and the optional config file into a validated RunConfig."""
    args = _build_parser().parse_args(argv)
    if args.command is None:
        raise ConfigError(f"a subcommand is required: {', '.join(COMMANDS)}")
    command = args.command

    raw = {}
    if args.config:
        raw = _read_config_file(args.config, command)

    def pick(key: str, flag_value, parse, default):
        if flag_value is not None:
            return flag_value
        if key in raw:
            return parse(key, raw[key]) if parse in (_parse_float, _parse_int) else parse(raw[key])
        return default

    t_h = pick("t_h", args.t_h, _parse_float, 0.5)
    config = RunConfig(
        command=command,
        n_sites=pick("n_sites", args.n_sites, _parse_int, 50),
        coupling=pick("coupling", None, _parse_float, 1.0),
        v=pick("v", args.v, _parse_float, 0.005),
        t_c=pick("t_c", args.t_c, _parse_float, 0.25 if command != "scaling" else 0.1),
        t_h=t_h,
        threads=_resolve_cli_threads(pick("threads", args.threads, _parse_int, None)),
        out=pick("out", args.out, str, "."),
    )

    if command in ("cycle", "cycles"):
        h_i = pick("h_i", args.h_i, _parse_float, _DEFAULT_H_I)
        jt_flag = args.jt if args.jt is None else _parse_jt(args.jt)
        config = replace(
            config,
            h_i=h_i,
            h_f=pick("h_f", args.h_f, _parse_float, h_i + 0.5),
            jt=pick("jt", jt_flag, _parse_jt, "complete" if command == "cycle" else 1.0),
        )
        if command == "cycle":
            config = replace(config, oracle=bool(pick("oracle", args.oracle, _parse_bool, False)))
        else:
            config = replace(config, n_cyc=pick("n_cyc", args.n_cyc, _parse_int, 30))
    elif command == "phase-diagram":
        config = replace(
            config,
            delta_h=pick("delta_h", args.delta_h, _parse_float, 0.5),
            h_min=pick("h_min", None, _parse_float, 0.1),
            h_max=pick("h_max", None, _parse_float, 2.0),
            n_h=pick("n_h", None, _parse_int, 60),
            t_min=pick("t_min", None, _parse_float, 0.02),
            t_max=pick("t_max", None, _parse_float, t_h - 0.02),
            n_t=pick("n_t", None, _parse_int, 50),
        )
    else:
        config = replace(
            config,
            delta_h=pick("delta_h", args.delta_h, _parse_float, 0.5),
            observable=pick("observable", args.observable, str,
                            "w_per_n" if command == "curves" else "pi_per_n"),
            h_min=pick("h_min", args.h_min, _parse_float, _DEFAULT_SWEEP["h_min"]),
            h_max=pick("h_max", args.h_max, _parse_float, _DEFAULT_SWEEP["h_max"]),
            h_step=pick("h_step", args.h_step, _parse_float, _DEFAULT_SWEEP["h_step"]),
        )
        if command == "velocity":
            vel_flag = args.velocities if args.velocities is None else _parse_velocities(args.velocities)
            config = replace(
                config,
                velocities=pick("velocities", vel_flag, _parse_velocities,
                                (0.001, 0.005, 0.01, 0.05)),
            )
        else:
            sizes_flag = args.sizes if args.sizes is None else _parse_sizes(args.sizes)
            config = replace(
                config,
                sizes=pick("sizes", sizes_flag, _parse_sizes,
                           (20, 50) if command == "curves" else (20, 30, 40, 50)),
            )

    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if config.n_sites < 2:
        raise ConfigError("n_sites >= 2 required")
    if config.coupling <= 0:
        raise ConfigError("coupling > 0 required")
    if config.v <= 0:
        raise ConfigError("v > 0 required")
    if config.t_c <= 0:
        raise ConfigError("t_c > 0 required")
    if not config.t_c < config.t_h:
        raise ConfigError("T_c < T_h required")
    if config.command in ("cycle", "cycles"):
        if not config.h_i < config.h_f:
            raise ConfigError("h_i < h_f required")
        if config.oracle and config.n_sites > MAX_QUENCH_SITES:
            raise ConfigError(f"--oracle requires n_sites <= {MAX_QUENCH_SITES}")
        if config.command == "cycles" and config.n_cyc < 1:
            raise ConfigError("n_cyc >= 1 required")
    else:
        if config.delta_h <= 0:
            raise ConfigError("h_i < h_f required")
    if config.command == "phase-diagram":
        if not config.h_min < config.h_max:
            raise ConfigError("h_min < h_max required")
        if not config.t_min < config.t_max:
            raise ConfigError("t_min < t_max required")
        if not config.t_max < config.t_h:
            raise ConfigError("T_c < T_h required")
        if config.t_min <= 0:
            raise ConfigError("t_min > 0 required")
        if config.n_h < 2 or config.n_t < 2:
            raise ConfigError("n_h and n_t >= 2 required")
    elif config.command in ("curves", "scaling", "velocity"):
        if not config.h_min < config.h_max:
            raise ConfigError("h_min < h_max required")
        if config.h_step <= 0:
            raise ConfigError("h_step > 0 required")
        if config.observable not in OBSERVABLES:
            raise ConfigError(
                f"unknown observable {config.observable!r}; expected one of {OBSERVABLES}"
            )
        if config.sizes is not None and any(n < 2 for n in config.sizes):
            raise ConfigError("all sizes must be >= 2")
        if config.velocities is not None and any(v <= 0 for v in config.velocities):
            raise ConfigError("velocities must be positive")
        if config.command == "scaling" and len(config.sizes) < 3:
            raise ConfigError("scaling requires at least 3 sizes")


def _fmt(x) -> str:
    """Fixed 15-significant-digit float formatting for CSV cells."""
    return format(float(x), ".15g")


def _jf(x):
    """JSON-safe float rounded to 15 significant digits."""
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return float(format(xf, ".15g"))


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_json(path: str, payload) -> None:
    _write(path, json.dumps(payload, indent=2) + "\n")


def _cycle_spec(config: RunConfig, h_i: float, h_f: float, n_sites: int, velocity: float,
                jt: float | str = "complete") -> CycleSpec:
    return CycleSpec(
        chain=ChainSpec(n_sites=n_sites, coupling=config.coupling),
        h_i=h_i,
        h_f=h_f,
        velocity=velocity,
        bath_cold=BathSpec(temperature=config.t_c),
        bath_hot=BathSpec(temperature=config.t_h),
        thermalization=jt,
    )


def _record_fields(record) -> dict:
    return {
        "e_a": _jf(record.e_a),
        "e_b": _jf(record.e_b),
        "e_c": _jf(record.e_c),
        "e_d": _jf(record.e_d),
        "w": _jf(record.w),
        "q_c": _jf(record.q_c),
        "q_h": _jf(record.q_h),
        "regime": record.regime.value if record.regime is not None else None,
    }


def _run_cycle_cmd(config: RunConfig) -> None:
    spec = _cycle_spec(config, config.h_i, config.h_f, config.n_sites, config.v, config.jt)
    record = stationary_cycle(spec)
    metrics = engine_metrics(record, spec)
    payload = {
        "n_sites": config.n_sites,
        "coupling": _jf(config.coupling),
        "h_i": _jf(config.h_i),
        "h_f": _jf(config.h_f),
        "v": _jf(config.v),
        "t_c": _jf(config.t_c),
        "t_h": _jf(config.t_h),
        "jt": config.jt if isinstance(config.jt, str) else _jf(config.jt),
        **_record_fields(record),
        "eta": _jf(metrics.eta),
        "eta_carnot": _jf(metrics.eta_carnot),
        "delta_eta": _jf(metrics.delta_eta),
        "pi": _jf(metrics.pi),
        "eta_r": _jf(metrics.eta_r),
        "eta_r_carnot": _jf(metrics.eta_r_carnot),
        "delta_eta_r": _jf(metrics.delta_eta_r),
        "pi_r": _jf(metrics.pi_r),
        "flags": list(metrics.flags),
    }
    if config.oracle:
        reference = exact_cycle(spec)
        payload["oracle"] = _record_fields(reference)
        payload["oracle_max_delta"] = _jf(
            max(
                abs(getattr(record, name) - getattr(reference, name))
                for name in ("e_a", "e_b", "e_c", "e_d", "w", "q_c", "q_h")
            )
        )
    _write_json(os.path.join(config.out, "cycle.json"), payload)


def _run_cycles_cmd(config: RunConfig) -> None:
    spec = _cycle_spec(config, config.h_i, config.h_f, config.n_sites, config.v, config.jt)
    records = run_cycles_partial(spec, config.n_cyc)
    lines = ["n_cycle,e_a,e_b,e_c,e_d,w,q_c,q_h"]
    for rec in records:
        lines.append(
            f"{rec.n_cycle},{_fmt(rec.e_a)},{_fmt(rec.e_b)},{_fmt(rec.e_c)},{_fmt(rec.e_d)},"
            f"{_fmt(rec.w)},{_fmt(rec.q_c)},{_fmt(rec.q_h)}"
        )
    _write(os.path.join(config.out, "cycles.csv"), "\n".join(lines) + "\n")


def _run_phase_diagram_cmd(config: RunConfig) -> None:
    grid = Grid2D.regular(
        (config.h_min, config.h_max),
        config.n_h,
        (config.t_min, config.t_max),
        config.n_t,
        n_sites=config.n_sites,
        delta_h=config.delta_h,
        velocity=config.v,
        t_hot=config.t_h,
        coupling=config.coupling,
    )
    rmap = sweep_regime_map(grid, threads=config.threads)
    lines = ["h_i,T_c,regime,w,q_c,q_h"]
    for i, h in enumerate(grid.x_values):
        for j, t in enumerate(grid.y_values):
            lines.append(
                f"{_fmt(h)},{_fmt(t)},{rmap.labels[i, j]},{_fmt(rmap.work[i, j])},"
                f"{_fmt(rmap.heat_cold[i, j])},{_fmt(rmap.heat_hot[i, j])}"
            )
    _write(os.path.join(config.out, "phase_diagram.csv"), "\n".join(lines) + "\n")

    boundaries = {}
    for regime in Regime:
        pieces = extract_regime_boundary(rmap, regime)
        boundaries[regime.value] = [
            [[_jf(h), _jf(t)] for h, t in piece] for piece in pieces
        ]
    _write_json(os.path.join(config.out, "boundaries.json"), boundaries)


def _h_grid(config: RunConfig) -> np.ndarray:
    count = int(math.floor((config.h_max - config.h_min) / config.h_step + 1e-9)) + 1
    return config.h_min + config.h_step * np.arange(count)


def _emit_curves(config: RunConfig, curves, tag_name: str, tags) -> int:
    """Write curve and exclusion CSVs; returns the number of excluded points."""
    head = f"observable,n_sites,{tag_name}," if tag_name else "observable,n_sites,"
    lines = [head + "h_i,value"]
    excl_lines = [head + "h_i,reason"]
    for tag, curve in zip(tags, curves):
        prefix = f"{curve.observable},{curve.n_sites}" + (f",{_fmt(tag)}" if tag_name else "")
        for h, y in zip(curve.x, curve.y):
            lines.append(f"{prefix},{_fmt(h)},{_fmt(y)}")
        for h, reason in curve.excluded:
            excl_lines.append(f"{prefix},{_fmt(h)},{reason}")
    stem = "velocity" if tag_name else "curves"
    _write(os.path.join(config.out, f"{stem}.csv"), "\n".join(lines) + "\n")
    _write(os.path.join(config.out, f"{stem}_excluded.csv"), "\n".join(excl_lines) + "\n")
    return sum(len(curve.excluded) for curve in curves)


def _run_curves_cmd(config: RunConfig) -> None:
    template = _cycle_spec(
        config, _DEFAULT_H_I, _DEFAULT_H_I + config.delta_h, config.sizes[0], config.v
    )
    curves = sweep_observable(
        _h_grid(config), config.sizes, template, config.observable, threads=config.threads
    )
    excluded = _emit_curves(config, curves, "", config.sizes)
    if excluded:
        print(f"warning: {excluded} points excluded (see curves_excluded.csv)", file=sys.stderr)


def _run_scaling_cmd(config: RunConfig) -> None:
    template = _cycle_spec(
        config, _DEFAULT_H_I, _DEFAULT_H_I + config.delta_h, config.sizes[0], config.v
    )
    curves = sweep_observable(
        _h_grid(config), config.sizes, template, config.observable, threads=config.threads
    )
    critical, paramagnetic = [], []
    for curve in curves:
        pair = find_peaks(curve)
        if pair.critical is None:
            raise ConvergenceError(f"critical peak absent at N={curve.n_sites}")
        critical.append(pair.critical)
        paramagnetic.append(pair.paramagnetic)
    fit = fit_power_law([(n, p.height) for n, p in zip(config.sizes, critical)])
    para_heights = [p.height for p in paramagnetic if p is not None]
    if para_heights:
        mean = sum(para_heights) / len(para_heights)
        para_variation = (max(para_heights) - min(para_heights)) / abs(mean)
    else:
        para_variation = None
    payload = {
        "observable": config.observable,
        "n_sites": list(config.sizes),
        "t_c": _jf(config.t_c),
        "t_h": _jf(config.t_h),
        "delta_h": _jf(config.delta_h),
        "v": _jf(config.v),
        "alpha_critical": _jf(fit.alpha),
        "critical_fit": {
            "alpha": _jf(fit.alpha),
            "prefactor": _jf(fit.prefactor),
            "residual": _jf(fit.residual),
            "points": [[_jf(n), _jf(val)] for n, val in fit.points],
        },
        "critical_peaks": [
            {"n_sites": n, "h_i": _jf(p.h_i), "height": _jf(p.height)}
            for n, p in zip(config.sizes, critical)
        ],
        "paramagnetic_peaks": [
            {"n_sites": n, "h_i": _jf(p.h_i) if p else None, "height": _jf(p.height) if p else None}
            for n, p in zip(config.sizes, paramagnetic)
        ],
        "paramagnetic_variation": _jf(para_variation) if para_variation is not None else None,
    }
    _write_json(os.path.join(config.out, "scaling.json"), payload)


def _run_velocity_cmd(config: RunConfig) -> None:
    template = _cycle_spec(
        config, _DEFAULT_H_I, _DEFAULT_H_I + config.delta_h, config.n_sites, config.velocities[0]
    )
    curves = velocity_scan(
        config.velocities, template, config.observable,
        h_grid=_h_grid(config), threads=config.threads,
    )
    excluded = _emit_curves(config, curves, "velocity", config.velocities)
    peaks = []
    for v, curve in zip(config.velocities, curves):
        pair = find_peaks(curve)
        peaks.append(
            {
                "velocity": _jf(v),
                "critical": {"h_i": _jf(pair.critical.h_i), "height": _jf(pair.critical.height)}
                if pair.critical
                else None,
                "paramagnetic": {
                    "h_i": _jf(pair.paramagnetic.h_i),
                    "height": _jf(pair.paramagnetic.height),
                }
                if pair.paramagnetic
                else None,
            }
        )
    _write_json(os.path.join(config.out, "velocity_peaks.json"), {"peaks": peaks})
    if excluded:
        print(f"warning: {excluded} points excluded (see velocity_excluded.csv)", file=sys.stderr)


_RUNNERS = {
    "cycle": _run_cycle_cmd,
    "cycles": _run_cycles_cmd,
    "phase-diagram": _run_phase_diagram_cmd,
    "curves": _run_curves_cmd,
    "scaling": _run_scaling_cmd,
    "velocity": _run_velocity_cmd,
}


def execute(config: RunConfig) -> int:
    """Run one parsed configuration; returns the process exit code."""
    os.makedirs(config.out, exist_ok=True)
    try:
        _RUNNERS[config.command](config)
    except (
        IntegrationError,
        DiagonalizationError,
        ConvergenceError,
        ForbiddenRegime,
        MarginalSign,
        np.linalg.LinAlgError,
        ValueError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
