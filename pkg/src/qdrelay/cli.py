"""Command-line entry point: ``qdrelay {sweep,point,validate}``.

Exit codes: 0 success, 1 validation criteria failed, 2 configuration
error, 3 numeric or resolution error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from .chain import BSM_X_X, chain_fidelity, chain_links, chain_pair_rate
from .config import Config, ConfigError, load_config
from .formulas import jitter_std
from .numerics import DomainError, ResolutionError
from .sweep import PRESETS, ChainConfig, emit_outputs, run_sweep
from .validation import Validator, format_report
from .wavepacket.compare import grid_branch_overlap
from .wavepacket.grid import X, XX
from .wavepacket.kernel import branch_overlap

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file ([source], [fiber], [filter], [sweep])")
    common.add_argument("--preset", choices=PRESETS, help="preset lattice; overrides [sweep] preset")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--threads", type=int, default=1, help="worker processes (default: 1)")
    common.add_argument("--grid", type=int, default=None, help="time-grid points for grid-engine cross-checks")

    p = argparse.ArgumentParser(prog="qdrelay", description="Quantum-dot entanglement relay chain simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", parents=[common], help="evaluate a 2D parameter lattice")
    sw.add_argument("--formats", default="csv,json,heatmap", help="comma list of csv, json, heatmap")
    sw.add_argument("--scale", type=int, default=1, help="heatmap pixel upscaling factor")
    sw.add_argument("--points", type=int, default=None, help="lattice points per axis (overrides config)")
    sw.add_argument("--depths", default=None, help="comma list of chain depths (overrides config)")

    pt = sub.add_parser("point", parents=[common], help="one chain evaluation with diagnostics")
    pt.add_argument("--depth", type=int, default=2, help="chain depth L (default: 2)")
    pt.add_argument(
        "--at",
        nargs=2,
        type=float,
        metavar=("AXIS1", "AXIS2"),
        help="evaluate the sweep configuration at these axis values",
    )

    sub.add_parser("validate", parents=[common], help="run the acceptance checks and write a report")
    return p


def _config(args) -> Config:
    return load_config(args.config, args.preset)


def _engine_check(cfg: ChainConfig, grid_points: int) -> dict:
    """First-layer mode overlap from both engines."""
    e = cfg.source.emitter(cfg.filter)
    dE = cfg.source.delta_E
    s = jitter_std(dE, cfg.jitter_convention)
    left, right = (X, X) if cfg.bsm_mode == BSM_X_X else (X, XX)
    return {
        "grid_points": grid_points,
        "M_closed_form": branch_overlap(e, left, e, right, s, s),
        "M_grid": grid_branch_overlap(e, left, e, right, dE, dE, cfg.jitter_convention, grid_points),
    }


def _cmd_sweep(args) -> int:
    spec = _config(args).require_sweep()
    if args.points:
        spec = replace(spec, axis1=replace(spec.axis1, points=args.points), axis2=replace(spec.axis2, points=args.points))
    if args.depths:
        try:
            spec = replace(spec, depths=tuple(int(d) for d in args.depths.split(",")))
        except ValueError:
            raise ConfigError(f"--depths must be a comma list of integers, got {args.depths!r}", "depths") from None
    table = run_sweep(spec, threads=args.threads)
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    paths = emit_outputs(table, args.out, formats, scale=args.scale)
    if args.grid:
        v1 = spec.axis1.values[spec.axis1.points // 2]
        v2 = spec.axis2.values[spec.axis2.points // 2]
        chk = _engine_check(spec.config_at(v1, v2), args.grid)
        print(
            f"engine cross-check at {spec.axis1.name}={v1:g}, {spec.axis2.name}={v2:g}: "
            f"M closed form {chk['M_closed_form']:.6f}, grid {chk['M_grid']:.6f}"
        )
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_point(args) -> int:
    cfg_all = _config(args)
    cfg = cfg_all.fixed
    if args.at:
        cfg = cfg_all.require_sweep().config_at(*args.at)
    chain = cfg.chain(args.depth)
    res = chain_fidelity(chain)
    doc = {
        "depth": args.depth,
        "source": {
            "S": cfg.source.S,
            "g2": cfg.source.g2,
            "delta_E": cfg.source.delta_E,
            "P_X": cfg.source.P_X,
            "P_XX": cfg.source.P_XX,
            "T1_X_ps": cfg.source.T1_X,
            "T1_XX_ps": cfg.source.T1_XX,
        },
        "filter_fwhm": cfg.filter.fwhm if cfg.filter else None,
        "jitter_convention": cfg.jitter_convention,
        "bsm_mode": cfg.bsm_mode,
        "fidelity": res.fidelity,
        "success_prob": res.success_prob,
        "pair_rate_hz": chain_pair_rate(chain, res, cfg.rate),
        "link_transmissions": [link.transmission for link in chain_links(chain)],
        **res.diagnostics.as_dict(),
        "final_state_real": res.state.matrix.real.tolist(),
        "final_state_imag": res.state.matrix.imag.tolist(),
    }
    if args.grid:
        doc["engine_check"] = _engine_check(cfg, args.grid)
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_validate(args) -> int:
    v = Validator(threads=args.threads, grid_points=args.grid or 1024)
    results = []
    for check in v.checks():
        res = check()
        print(res.line, flush=True)
        results.append(res)
    report = format_report(results, v.timings)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "validation_report.txt"
    path.write_text(report, encoding="utf-8")
    print(path)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.grid is not None and args.grid < 64:
        print("error: --grid must be >= 64", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"sweep": _cmd_sweep, "point": _cmd_point, "validate": _cmd_validate}[args.command]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ResolutionError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
