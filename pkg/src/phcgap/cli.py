"""Command-line front end: ``phcgap bands | optimize | sweep CONFIG``.

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures (eigensolver or SDP).  Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import datetime
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .bands import band_diagram
from .config import KEYS, ConfigError, build_config, parse_assignments
from .eig import NumericalError
from .lattice import build_grid, build_k_path, build_symmetry_map
from .optimizer import RunConfig, RunResult, initial_config, multi_restart, optimize

log = logging.getLogger("phcgap")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
DEFAULT_OUTPUT = "phcgap-out"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phcgap",
        description="Band diagrams and band-gap optimization of 2D square-lattice photonic crystals.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="configuration file (key = value lines)")
        sp.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a configuration key; may be repeated",
        )
        sp.add_argument("-o", "--output", help="output directory (overrides output.dir)")
        sp.add_argument("-v", "--verbose", action="count", default=0)

    sp = sub.add_parser("bands", help="band diagram of the configured initial design")
    common(sp)
    sp.add_argument("--m", help="comma-separated band indices to report (default: band.m)")

    sp = sub.add_parser("optimize", help="run the outer iteration (with restarts)")
    common(sp)
    sp.add_argument("--dump-sdp", action="store_true", help="write every linear SDP to the output directory")

    sp = sub.add_parser("sweep", help="optimize the gap above each band in a list")
    common(sp)
    sp.add_argument("--m", required=True, help="comma-separated band indices, one run each")
    sp.add_argument("--dump-sdp", action="store_true")
    return p


def _int_list(text: str, what: str) -> list:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise ConfigError(f"{what}: band indices must be >= 1")
    return vals


def load_config(path, overrides=(), output=None) -> RunConfig:
    """Read ``path``, apply ``KEY=VALUE`` overrides and validate."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text()
    values = parse_assignments(text, str(path))
    extra = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key = item.split("=", 1)[0].strip()
        if key not in KEYS:
            raise ConfigError(f"--set {item!r}: unknown key {key!r}")
        extra.append(item)
    if extra:
        over = parse_assignments("\n".join(extra), "--set")
        over_lines = over.pop("_lines")
        values.update(over)
        for name in over_lines:
            values["_lines"].pop(name, None)
    if output is not None:
        values["output_dir"] = output
    cfg = build_config(values, str(path))
    if cfg.init_file and not Path(cfg.init_file).is_absolute():
        cfg = replace(cfg, init_file=str((path.parent / cfg.init_file).resolve()))
    if cfg.init_kind == "file" and not Path(cfg.init_file).is_file():
        raise ConfigError(f"init.file: {cfg.init_file} not found")
    if cfg.output_dir is None:
        cfg = replace(cfg, output_dir=DEFAULT_OUTPUT)
    return cfg


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_bands(cfg: RunConfig, ms=None) -> int:
    ms = [cfg.m] if ms is None else ms
    grid = build_grid(cfg.n)
    sym = build_symmetry_map(grid)
    design = initial_config(
        cfg.init_kind, cfg.seed, sym, cfg.bounds,
        radius=cfg.radius, thickness=cfg.thickness, path=cfg.init_file,
    )
    kpath = build_k_path(cfg.n_k)
    count = min(max(ms) + 1 + cfg.guard_bands, grid.n_dofs)
    bands = band_diagram(design, kpath, cfg.polarization, count, m=ms[0], method=cfg.eig_method)

    gaps = []
    for m in ms:
        lo, hi, J = bands.edges(m)
        gaps.append({"m": m, "lambda_lower": lo, "lambda_upper": hi, "gap_midgap": J})
        log.info("m=%d  lower=%.6g upper=%.6g  J=%.6f", m, lo, hi, J)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_bands_csv(bands, out / "bands.csv")
    io.write_design_csv(design, out / "design.csv")
    io.bands_svg(bands, out / "bands.svg", m=ms[0])
    io.design_svg(design, out / "design.svg")
    io.write_json(
        {
            "polarization": cfg.polarization,
            "n": cfg.n,
            "n_k": cfg.n_k,
            "init_kind": cfg.init_kind,
            "gaps": gaps,
        },
        out / "summary.json",
    )
    return EXIT_OK


def _run_record(cfg: RunConfig, best: RunResult, results: list) -> dict:
    data = best.to_dict()
    data["config"].pop("output_dir", None)
    data["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    data["restarts"] = [
        {
            "seed": r.config.seed,
            "termination": r.termination,
            "iterations": len(r.history),
            "initial_gap_midgap": r.initial_gap,
            "final_gap_midgap": r.final_gap,
        }
        for r in results
    ]
    return data


def _write_run(cfg: RunConfig, best: RunResult, results: list, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(_run_record(cfg, best, results), out / "run.json")
    io.write_design_csv(best.final_design, out / "design.csv")
    io.write_bands_csv(best.final_bands, out / "bands.csv")
    io.design_svg(best.final_design, out / "design.svg")
    io.bands_svg(best.final_bands, out / "bands.svg")


def _optimize_into(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    if cfg.restarts > 1:
        best, results = multi_restart(cfg)
    else:
        best = optimize(cfg)
        results = [best]
    _write_run(cfg, best, results, out)
    log.info(
        "%s after %d iterations: J %.6f -> %.6f",
        best.termination, len(best.history), best.initial_gap, best.final_gap,
    )
    if best.termination == "solver_failure":
        print(f"phcgap: solver failure: {best.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    return _optimize_into(cfg)


def cmd_sweep(cfg: RunConfig, ms) -> int:
    """One optimization per band index, each in ``<output>/m<m>``."""
    base = Path(cfg.output_dir)
    status = EXIT_OK
    rows = []
    for m in ms:
        sub = replace(cfg, m=m, output_dir=str(base / f"m{m}"))
        code = _optimize_into(sub)
        status = max(status, code)
        rows.append({"m": m, "exit": code, "run": f"m{m}/run.json"})
    io.write_json({"runs": rows}, base / "sweep.json")
    return status


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.overrides, args.output)
        if getattr(args, "dump_sdp", False):
            cfg = replace(cfg, dump_sdp=True)
        ms = _int_list(args.m, "--m") if getattr(args, "m", None) else None
        if args.command == "bands":
            return cmd_bands(cfg, ms)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        return cmd_sweep(cfg, ms)
    except ConfigError as exc:
        print(f"phcgap: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        # bad design files and similar input problems surface here
        print(f"phcgap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, RuntimeError) as exc:
        print(f"phcgap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
