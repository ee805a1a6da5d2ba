"""Command-line front end: parameter sweeps written as CSV plus a JSON run manifest."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .channel import RadioParams, load_amc_table
from .montecarlo import FULL_ITERATIONS, ExperimentConfig, run_experiment
from .schemes import ALL_SCHEMES, SchemeId
from .topology import SimRegion

log = logging.getLogger("udnsim")

DESK_ITERATIONS = 2000
MAX_DENSITY = 1e5
CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "axis",
    "axis_value",
    "scheme",
    "mean_throughput_bps",
    "throughput_stderr_bps",
    "coverage",
    "coverage_stderr",
    "mean_nc_nc_pairs",
    "mean_c_c_pairs",
    "mean_nc_c_pairs",
    "mean_comp_oma_users",
    "mean_nc_oma_users",
    "drops",
    "empty_drops",
)
AXES = {
    "lambda_u": "lambda_u",
    "lambda_b": "lambda_b",
    "gamma_th": "gamma_th_db",
    "cluster_size": "avg_cluster_size",
}

_RADIO_KEYS = {f.name: f.type for f in dataclasses.fields(RadioParams)}
_TOP_KEYS = {
    "lambda_u": float,
    "lambda_b": float,
    "cluster_size": float,
    "gamma_th_db": float,
    "iterations": int,
    "seed": int,
    "min_gap_db": float,
    "region_side_km": float,
    "schemes": str,
    "amc_table": str,
    "sweep": str,
}
KNOWN_KEYS = set(_TOP_KEYS) | set(_RADIO_KEYS)


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


@dataclass
class SweepSpec:
    axis: str
    values: list[float]
    fixed: ExperimentConfig
    output_path: Path | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep: unknown axis {self.axis!r} (expected one of {sorted(AXES)})")
        if not self.values:
            raise ConfigError("sweep: no values given")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep: values must be strictly increasing")
        for v in self.values:
            _check_bounds(self.axis, v)

    def configs(self):
        field = AXES[self.axis]
        for v in self.values:
            yield v, self.fixed.with_(**{field: v})


def _check_bounds(key: str, value):
    if key in ("lambda_u", "lambda_b") and not 0 <= value <= MAX_DENSITY:
        raise ConfigError(f"{key}: {value} outside [0, {MAX_DENSITY:g}] per km^2")
    if key == "cluster_size" and value < 1:
        raise ConfigError(f"{key}: {value} must be >= 1")
    if key in ("gamma_th", "gamma_th_db") and not -50 <= value <= 50:
        raise ConfigError(f"{key}: {value} dB outside [-50, 50]")
    if key == "iterations" and value < 1:
        raise ConfigError(f"{key}: must be >= 1")
    if key == "region_side_km" and value <= 0:
        raise ConfigError(f"{key}: must be positive")


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _convert(key: str, value):
    kind = _TOP_KEYS.get(key) or _RADIO_KEYS[key]
    if kind in (int, "int"):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if kind in (float, "float"):
        try:
            out = float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
        if not math.isfinite(out):
            raise ConfigError(f"{key}: must be finite")
        return out
    return value


def _parse_schemes(value) -> tuple[SchemeId, ...]:
    names = value if isinstance(value, list) else [s for s in str(value).split(",") if s.strip()]
    out = []
    for name in names:
        try:
            out.append(SchemeId.parse(name))
        except ValueError as exc:
            raise ConfigError(f"schemes: {exc}") from None
    return tuple(dict.fromkeys(out))


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigError(f"sweep: expected '<axis>=v1,v2,...', got {text!r}")
    axis, raw = (s.strip() for s in text.split("=", 1))
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"sweep: non-numeric value in {raw!r}") from None
    return axis, values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="udnsim",
        description="CoMP/NOMA ultra-dense network Monte-Carlo sweeps (CSV + JSON manifest).",
    )
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--lambda-u", type=float, help="user density per km^2")
    p.add_argument("--lambda-b", type=float, help="BS density per km^2")
    p.add_argument("--cluster-size", type=float, help="average CoMP cluster size")
    p.add_argument("--gamma-th-db", type=float, help="CoMP SINR threshold in dB")
    p.add_argument("--scheme", action="append", help="scheme to evaluate (repeatable)")
    p.add_argument("--iterations", type=int, help="Monte-Carlo drops per point")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--sweep", help="<axis>=v1,v2,... with axis in " + ", ".join(AXES))
    p.add_argument("--out", help="output CSV path (manifest goes to <out>.manifest.json)")
    p.add_argument("--paper-scale", action="store_true", help=f"{FULL_ITERATIONS} drops per point")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None, file_values: dict[str, str] | None = None):
    """Merge defaults, an optional config file and flags (flags win).

    Returns ``(sweep_spec, args, explicit_keys)``. Unspecified settings take the
    reference defaults, including ``iterations``.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    values: dict[str, object] = {}
    if args.config:
        values.update(read_config_file(args.config))
    if file_values:
        values.update(file_values)
    flag_map = {
        "lambda_u": args.lambda_u,
        "lambda_b": args.lambda_b,
        "cluster_size": args.cluster_size,
        "gamma_th_db": args.gamma_th_db,
        "iterations": args.iterations,
        "seed": args.seed,
        "sweep": args.sweep,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if args.scheme:
        values["schemes"] = list(args.scheme)

    explicit = set(values)
    converted = {}
    for key, value in values.items():
        if key == "schemes":
            converted[key] = _parse_schemes(value)
        elif key == "sweep":
            converted[key] = _parse_sweep(str(value))
        else:
            converted[key] = value if not isinstance(value, str) else _convert(key, value)
            _check_bounds(key, converted[key])

    radio_kwargs = {k: converted[k] for k in _RADIO_KEYS if k in converted}
    try:
        radio = RadioParams(**radio_kwargs)
        region = SimRegion(converted.get("region_side_km", 1.0))
        config = ExperimentConfig(
            lambda_u=converted.get("lambda_u", 100.0),
            lambda_b=converted.get("lambda_b", 100.0),
            avg_cluster_size=converted.get("cluster_size", 5.0),
            gamma_th_db=converted.get("gamma_th_db", 0.0),
            schemes=converted.get("schemes", ALL_SCHEMES),
            iterations=converted.get("iterations", FULL_ITERATIONS),
            base_seed=converted.get("seed", 0),
            radio=radio,
            region=region,
            min_gap_db=converted.get("min_gap_db", 10.0),
            amc_table_path=converted.get("amc_table"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.paper_scale and "iterations" not in explicit:
        config = config.with_(iterations=FULL_ITERATIONS)

    if "sweep" in converted:
        axis, sweep_values = converted["sweep"]
    else:
        axis, sweep_values = "lambda_u", [config.lambda_u]
    spec = SweepSpec(axis, sweep_values, config, Path(args.out) if args.out else None)
    return spec, args, explicit


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in results")
    return repr(float(x))


def sweep_rows(spec: SweepSpec, workers: int = 1):
    for value, cfg in spec.configs():
        log.info("%s=%g: %d drops", spec.axis, value, cfg.iterations)
        agg = run_experiment(cfg, workers=workers)
        for scheme in cfg.schemes:
            st = agg.stats[scheme.value]
            c = st.mean_counts
            yield [
                spec.axis,
                _fmt(float(value)),
                scheme.value,
                _fmt(st.mean_throughput),
                _fmt(st.throughput_stderr),
                _fmt(st.coverage),
                _fmt(st.coverage_stderr),
                _fmt(c["nc_nc"]),
                _fmt(c["c_c"]),
                _fmt(c["nc_c"]),
                _fmt(c["comp_oma"]),
                _fmt(c["nc_oma"]),
                _fmt(agg.drops),
                _fmt(agg.empty_drops),
            ]


def config_file_text(spec: SweepSpec) -> str:
    """Flat config that reproduces ``spec`` when passed back through ``--config``."""
    cfg = spec.fixed
    lines = [
        f"lambda_u = {cfg.lambda_u!r}",
        f"lambda_b = {cfg.lambda_b!r}",
        f"cluster_size = {cfg.avg_cluster_size!r}",
        f"gamma_th_db = {cfg.gamma_th_db!r}",
        f"iterations = {cfg.iterations}",
        f"seed = {cfg.base_seed}",
        f"min_gap_db = {cfg.min_gap_db!r}",
        f"region_side_km = {cfg.region.side_length!r}",
        "schemes = " + ",".join(s.value for s in cfg.schemes),
        "sweep = " + spec.axis + "=" + ",".join(repr(float(v)) for v in spec.values),
    ]
    if cfg.amc_table_path:
        lines.append(f"amc_table = {cfg.amc_table_path}")
    lines += [f"{k} = {getattr(cfg.radio, k)!r}" for k in _RADIO_KEYS]
    return "\n".join(lines) + "\n"


def build_manifest(spec: SweepSpec) -> dict:
    cfg = spec.fixed
    table = load_amc_table(cfg.amc_table_path)
    return {
        "tool": "udnsim",
        "version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_columns": list(CSV_COLUMNS),
        "base_seed": cfg.base_seed,
        "sweep": {"axis": spec.axis, "values": [float(v) for v in spec.values]},
        "config": {
            "lambda_u": cfg.lambda_u,
            "lambda_b": cfg.lambda_b,
            "avg_cluster_size": cfg.avg_cluster_size,
            "gamma_th_db": cfg.gamma_th_db,
            "iterations": cfg.iterations,
            "schemes": [s.value for s in cfg.schemes],
            "min_gap_db": cfg.min_gap_db,
            "region_side_km": cfg.region.side_length,
            "radio": dataclasses.asdict(cfg.radio),
        },
        "amc_table": [[float(t), float(e)] for t, e in zip(table.thresholds_db, table.efficiencies)],
        "config_file": config_file_text(spec),
    }


def run_sweep(spec: SweepSpec, workers: int = 1, out=None) -> str:
    """Run every sweep point and return the CSV text; also write files when a path is set."""
    out = Path(out) if out is not None else spec.output_path
    handles = None
    if out is not None:
        # fail on unwritable destinations before spending any compute
        handles = (
            open(out, "w", encoding="utf-8", newline=""),
            open(manifest_path(out), "w", encoding="utf-8", newline="\n"),
        )
    try:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in sweep_rows(spec, workers):
            writer.writerow(row)
        text = buf.getvalue()
        if handles:
            handles[0].write(text)
            json.dump(build_manifest(spec), handles[1], indent=2, sort_keys=True)
            handles[1].write("\n")
    finally:
        if handles:
            for h in handles:
                h.close()
    return text


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def main(argv=None) -> int:
    try:
        spec, args, explicit = parse_config(argv)
    except ConfigError as exc:
        print(f"udnsim: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    if "iterations" not in explicit and not args.paper_scale:
        spec.fixed = spec.fixed.with_(iterations=DESK_ITERATIONS)
    try:
        text = run_sweep(spec, workers=args.workers)
    except OSError as exc:
        print(f"udnsim: error: cannot write output: {exc}", file=sys.stderr)
        return 1
    if spec.output_path is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
