"""Curve generation, experiment configs, output files, and the CLI.

Config files are a single JSON object (schema in the README; unknown keys
are rejected, numeric invariants checked at parse time). Outputs are plain
CSV/JSON so structure-preservation claims can be audited from files alone:
every float is written with 17 significant digits, which round-trips
float64 exactly.

Exit codes: 0 success (including an epsilon stop), 2 config error,
3 solver or geometry failure (outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .driver import RunConfig, TimeSeries, gamma_study, relocate, run
from .errors import BadSpec, ConfigError, CurveFlowError, IoError, ParseError, ValidationError
from .geometry import MIN_VERTICES, FlowParams, PolygonalCurve
from .kernels import BACKEND
from .solver import SolverConfig

logger = logging.getLogger("curveflow")

CURVE_KINDS = ("kubire", "rectangle", "circle", "regular_polygon", "file")
DEFAULT_RECT_WIDTH = 4.0
DEFAULT_RECT_HEIGHT = 2.0
DIAGNOSTICS_HEADER = "step,B,L,A,lambda,mu,gamma,mesh_ratio,solver_iters,residual"


@dataclass(frozen=True)
class CurveSpec:
    kind: str
    n_vertices: int = 0
    width: float = DEFAULT_RECT_WIDTH
    height: float = DEFAULT_RECT_HEIGHT
    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise BadSpec(f"curve kind must be one of {CURVE_KINDS}, got {self.kind!r}")
        if self.kind != "file" and self.n_vertices < MIN_VERTICES:
            raise BadSpec(
                f"n_vertices must be >= {MIN_VERTICES}, got {self.n_vertices}"
            )
        if self.kind == "rectangle" and (self.width <= 0 or self.height <= 0):
            raise BadSpec("rectangle needs positive width and height")
        if self.kind in ("circle", "regular_polygon") and self.radius <= 0:
            raise BadSpec("radius must be positive")
        if self.kind == "file" and not self.path:
            raise BadSpec("kind 'file' needs a path")


@dataclass(frozen=True)
class RelocationSpec:
    alpha: float = 5.0
    dt: float = 1e-4
    until_time: float = 0.1


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    curve: CurveSpec
    run: RunConfig
    relocation: Optional[RelocationSpec] = None
    output: OutputSpec = OutputSpec()


def _kubire_vertices(n: int) -> np.ndarray:
    """Pinched initial curve sampled at t = i/N, i = 1..N."""
    t = np.arange(1, n + 1) / n
    a1 = 1.8 * np.cos(2 * np.pi * t)
    a2 = 0.2 + np.sin(np.pi * t) * np.sin(6 * np.pi * t) * np.sin(2 * a1)
    a3 = 0.5 * np.sin(2 * np.pi * t) + np.sin(a1) + a2 * np.sin(2 * np.pi * t)
    return np.stack([0.5 * a1, 0.54 * a3], axis=1)


def _rectangle_vertices(n: int, width: float, height: float) -> np.ndarray:
    """Vertices on a rectangle boundary, corners included, CCW.

    Edge counts per side are proportional to side length (largest-remainder
    rounding, at least one edge per side).
    """
    half_w, half_h = width / 2.0, height / 2.0
    corners = np.array(
        [[-half_w, -half_h], [half_w, -half_h], [half_w, half_h], [-half_w, half_h]]
    )
    sides = np.array([width, height, width, height])
    ideal = n * sides / sides.sum()
    counts = np.maximum(1, np.floor(ideal).astype(int))
    while counts.sum() > n:
        # shed excess only from sides that keep at least one edge
        excess = np.where(counts > 1, counts - ideal, -np.inf)
        counts[np.argmax(excess)] -= 1
    remainders = ideal - counts
    for _ in range(n - counts.sum()):
        j = int(np.argmax(remainders))
        counts[j] += 1
        remainders[j] = -np.inf
    points = []
    for s in range(4):
        a, b = corners[s], corners[(s + 1) % 4]
        for j in range(counts[s]):
            points.append(a + (b - a) * (j / counts[s]))
    return np.array(points)


def _polygon_vertices(n: int, radius: float, center) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(1, n + 1) / n
    return np.stack(
        [center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)],
        axis=1,
    )


def read_curve_csv(path) -> np.ndarray:
    """Parse a snapshot CSV (header i,x,y) back into a vertex array."""
    try:
        lines = Path(path).read_text().strip().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines or lines[0].strip() != "i,x,y":
        raise ParseError(f"{path}: expected header 'i,x,y'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            rows.append((float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return np.array(rows)


def generate_curve(spec: CurveSpec) -> PolygonalCurve:
    """Build the initial curve for a spec; always returns a CCW valid curve."""
    if spec.kind == "kubire":
        vertices = _kubire_vertices(spec.n_vertices)
    elif spec.kind == "rectangle":
        vertices = _rectangle_vertices(spec.n_vertices, spec.width, spec.height)
    elif spec.kind in ("circle", "regular_polygon"):
        vertices = _polygon_vertices(spec.n_vertices, spec.radius, spec.center)
    else:
        vertices = read_curve_csv(spec.path)
    return PolygonalCurve.from_vertices(vertices, on_clockwise="flip")


# --------------------------------------------------------------------------
# config parsing

_SOLVER_KEYS = {"rel_tol", "abs_tol", "max_iters", "fd_step", "damping", "max_halvings"}
_PARAM_KEYS = {"dt", "c0", "alpha"}
_CURVE_KEYS = {"kind", "n_vertices", "width", "height", "radius", "center", "path"}
_RELOC_KEYS = {"alpha", "dt", "until_time"}
_OUTPUT_KEYS = {"directory", "formats"}
_TOP_KEYS = {
    "flow",
    "curve",
    "params",
    "relocation",
    "max_steps",
    "stop_epsilon",
    "snapshot_every",
    "solver",
    "output",
}


def _check_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {sorted(unknown)}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing required key '{key}'")
    return obj[key]


def _number(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        if default is None:
            raise ValidationError(f"{where}: missing required key '{key}'")
        return default
    value = obj[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{where}.{key}: expected a number, got {value!r}")
    return value


def config_from_dict(raw: dict, where: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: expected a JSON object")
    _check_keys(raw, _TOP_KEYS, where)

    curve_raw = _require(raw, "curve", where)
    _check_keys(curve_raw, _CURVE_KEYS, f"{where}.curve")
    try:
        center = tuple(curve_raw.get("center", (0.0, 0.0)))
        curve = CurveSpec(
            kind=_require(curve_raw, "kind", f"{where}.curve"),
            n_vertices=int(curve_raw.get("n_vertices", 0)),
            width=float(curve_raw.get("width", DEFAULT_RECT_WIDTH)),
            height=float(curve_raw.get("height", DEFAULT_RECT_HEIGHT)),
            radius=float(curve_raw.get("radius", 1.0)),
            center=(float(center[0]), float(center[1])),
            path=curve_raw.get("path"),
        )
    except BadSpec as exc:
        raise ValidationError(f"{where}.curve: {exc}") from exc

    params_raw = _require(raw, "params", where)
    _check_keys(params_raw, _PARAM_KEYS, f"{where}.params")
    dt = _number(params_raw, "dt", f"{where}.params")
    alpha = _number(params_raw, "alpha", f"{where}.params", default=0.0)
    c0 = _number(params_raw, "c0", f"{where}.params", default=0.0)
    if dt <= 0:
        raise ValidationError(f"{where}.params.dt: must be positive, got {dt}")
    if alpha < 0:
        raise ValidationError(f"{where}.params.alpha: must be >= 0, got {alpha}")

    solver_raw = raw.get("solver", {})
    _check_keys(solver_raw, _SOLVER_KEYS, f"{where}.solver")
    try:
        solver = SolverConfig(**solver_raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}.solver: {exc}") from exc

    stop_epsilon = raw.get("stop_epsilon")
    if stop_epsilon is not None:
        stop_epsilon = _number(raw, "stop_epsilon", where)
    try:
        run_config = RunConfig(
            flow=_require(raw, "flow", where),
            params=FlowParams(c0=float(c0), alpha=float(alpha), dt=float(dt)),
            max_steps=int(_number(raw, "max_steps", where)),
            stop_epsilon=stop_epsilon,
            snapshot_every=int(_number(raw, "snapshot_every", where, default=100)),
            solver=solver,
        )
    except (ValidationError, BadSpec) as exc:
        raise ValidationError(f"{where}: {exc}") from exc

    relocation = None
    if raw.get("relocation") is not None:
        reloc_raw = raw["relocation"]
        _check_keys(reloc_raw, _RELOC_KEYS, f"{where}.relocation")
        relocation = RelocationSpec(
            alpha=_number(reloc_raw, "alpha", f"{where}.relocation", default=5.0),
            dt=_number(reloc_raw, "dt", f"{where}.relocation", default=1e-4),
            until_time=_number(
                reloc_raw, "until_time", f"{where}.relocation", default=0.1
            ),
        )
        if relocation.dt <= 0 or relocation.until_time <= 0:
            raise ValidationError(f"{where}.relocation: dt and until_time must be > 0")

    output_raw = raw.get("output", {})
    _check_keys(output_raw, _OUTPUT_KEYS, f"{where}.output")
    formats = tuple(output_raw.get("formats", ("csv", "json")))
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ValidationError(f"{where}.output.formats: unknown format {fmt!r}")
    output = OutputSpec(directory=output_raw.get("directory", "out"), formats=formats)

    return ExperimentConfig(
        curve=curve, run=run_config, relocation=relocation, output=output
    )


def parse_config(path) -> ExperimentConfig:
    """Load and fully validate an experiment config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw, where=str(path))


# --------------------------------------------------------------------------
# output serialization

def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.17g}"


def _atomic_write(path: Path, text: str):
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_curve_csv(path, vertices: np.ndarray):
    lines = ["i,x,y"]
    for i, (x, y) in enumerate(np.asarray(vertices), start=1):
        lines.append(f"{i},{x:.17g},{y:.17g}")
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_outputs(series: TimeSeries, directory, formats=("csv", "json")):
    """Emit diagnostics.csv, snapshot_<step>.csv files, and run_summary.json."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc

    if "csv" in formats:
        lines = [DIAGNOSTICS_HEADER]
        for d in series.diagnostics:
            lines.append(
                ",".join(
                    [
                        str(d.step),
                        _fmt(d.B),
                        _fmt(d.L),
                        _fmt(d.A),
                        _fmt(d.lam),
                        _fmt(d.mu),
                        _fmt(d.gamma),
                        _fmt(d.mesh_ratio),
                        str(d.solver_iterations),
                        _fmt(d.residual),
                    ]
                )
            )
        _atomic_write(out / "diagnostics.csv", "\n".join(lines) + "\n")
        for step_no, curve in series.snapshots:
            write_curve_csv(out / f"snapshot_{step_no}.csv", curve.vertices)

    if "json" in formats:
        final = series.diagnostics[-1] if series.diagnostics else None
        summary = {
            "config": _config_echo(series.config),
            "termination": series.termination,
            "failure_detail": series.failure_detail,
            "steps": len(series.diagnostics),
            "backend": BACKEND,
            "final": None
            if final is None
            else {"B": final.B, "L": final.L, "A": final.A},
        }
        _atomic_write(out / "run_summary.json", json.dumps(summary, indent=2) + "\n")


def _config_echo(config: RunConfig) -> dict:
    echo = asdict(config)
    echo["params"] = asdict(config.params)
    echo["solver"] = asdict(config.solver)
    return echo


# --------------------------------------------------------------------------
# CLI

def _build_initial(config: ExperimentConfig, n_override: Optional[int] = None):
    spec = config.curve
    if n_override is not None and spec.kind != "file":
        spec = replace(spec, n_vertices=n_override)
    curve = generate_curve(spec)
    if config.relocation is not None:
        reloc = config.relocation
        curve = relocate(curve, reloc.alpha, reloc.dt, reloc.until_time)
    return curve


def _cmd_generate(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        raise ParseError(f"{args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.spec}:{exc.lineno}: {exc.msg}") from exc
    _check_keys(raw, _CURVE_KEYS, str(args.spec))
    center = tuple(raw.get("center", (0.0, 0.0)))
    spec = CurveSpec(
        kind=raw.get("kind", ""),
        n_vertices=int(raw.get("n_vertices", 0)),
        width=float(raw.get("width", DEFAULT_RECT_WIDTH)),
        height=float(raw.get("height", DEFAULT_RECT_HEIGHT)),
        radius=float(raw.get("radius", 1.0)),
        center=(float(center[0]), float(center[1])),
        path=raw.get("path"),
    )
    curve = generate_curve(spec)
    write_curve_csv(args.out, curve.vertices)
    print(f"wrote {curve.n} vertices to {args.out}")
    return 0


def _cmd_relocate(args) -> int:
    config = parse_config(args.config)
    if config.relocation is None:
        raise ValidationError(f"{args.config}: no 'relocation' block")
    curve = generate_curve(config.curve)
    relocated = relocate(
        curve,
        config.relocation.alpha,
        config.relocation.dt,
        config.relocation.until_time,
    )
    out = Path(args.out_dir or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_curve_csv(out / "relocated.csv", relocated.vertices)
    print(f"relocated curve written to {out / 'relocated.csv'}")
    return 0


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    initial = _build_initial(config)
    series = run(initial, config.run)
    out_dir = args.out_dir or config.output.directory
    write_outputs(series, out_dir, config.output.formats)
    final = series.diagnostics[-1] if series.diagnostics else None
    print(
        f"{config.run.flow}: {series.termination} after "
        f"{len(series.diagnostics)} steps"
        + (f" (B={final.B:.6g} L={final.L:.6g} A={final.A:.6g})" if final else "")
    )
    print(f"outputs in {out_dir}")
    if series.termination in ("solver_failure", "geometry_failure"):
        print(series.failure_detail, file=sys.stderr)
        return 3
    return 0


def _cmd_study_gamma(args) -> int:
    config = parse_config(args.config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValidationError("--values must list at least one number")
    rows = gamma_study(
        config.run,
        axis=args.axis,
        values=values,
        make_initial=lambda n: _build_initial(config, n_override=n),
        base_n=config.curve.n_vertices,
    )
    out = Path(args.out_dir or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["axis_value,final_gamma,steps,termination"]
    for row in rows:
        lines.append(
            f"{row.axis_value:.17g},{_fmt(row.final_gamma)},{row.steps},{row.termination}"
        )
    _atomic_write(out / f"gamma_study_{args.axis}.csv", "\n".join(lines) + "\n")
    for row in rows:
        print(
            f"{args.axis}={row.axis_value:g}: gamma={row.final_gamma} "
            f"({row.termination} after {row.steps} steps)"
        )
    failed = [r for r in rows if r.termination != "epsilon_stop"]
    return 3 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="curveflow",
        description="Structure-preserving Willmore/Helfrich flow on polygonal curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write an initial curve to CSV")
    p_gen.add_argument("--spec", required=True, help="curve spec JSON file")
    p_gen.add_argument("--out", required=True, help="output CSV path")
    p_gen.set_defaults(func=_cmd_generate)

    p_rel = sub.add_parser("relocate", help="run only the vertex relocation")
    p_rel.add_argument("--config", required=True)
    p_rel.add_argument("--out-dir", default=None)
    p_rel.set_defaults(func=_cmd_relocate)

    p_run = sub.add_parser("run", help="run a flow experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_gamma = sub.add_parser("study-gamma", help="final-gamma trend study")
    p_gamma.add_argument("--config", required=True)
    p_gamma.add_argument("--axis", required=True, choices=("dt", "n"))
    p_gamma.add_argument("--values", required=True, help="comma-separated list")
    p_gamma.add_argument("--out-dir", default=None)
    p_gamma.set_defaults(func=_cmd_study_gamma)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CurveFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
