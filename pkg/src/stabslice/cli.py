"""Command-line entry point: ``stabslice <command> --config cfg.json --out dir``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .evaluator import InvariantViolation
from .lab import (
    ConfigError,
    compile_command,
    emit_csv,
    emit_multiround_csv,
    emit_svg,
    fit_rows,
    load_config,
    read_csv,
    run_multiround,
    run_sweep,
)

log = logging.getLogger("stabslice")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabslice", description="Stabilizer-slicing experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "compile": "write the extraction circuit and decoder table",
        "sweep": "exact kappa sweep of sliced vs unsliced logical error",
        "multiround": "trajectory simulation over several rounds",
        "fit": "polynomial fits of a sweep CSV",
        "plot": "render a sweep CSV as SVG",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="experiment JSON")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=_u64, default=None, help="override the evaluator seed")
        sp.add_argument("--threads", type=_positive, default=1)
        if name in ("fit", "plot"):
            sp.add_argument("--degree", type=int, choices=(1, 2), default=2)
    return p


def _sweep_csv(cfg, out: Path, threads: int) -> Path:
    path = out / cfg.output("csv", "sweep.csv")
    if not path.exists():
        log.info("no sweep CSV at %s, running the sweep", path)
        emit_csv(run_sweep(cfg, threads), path)
    return path


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "compile":
        circuit, decoder = compile_command(cfg)
        (out / cfg.output("circuit", "circuit.txt")).write_text(circuit)
        (out / cfg.output("decoder", "decoder.txt")).write_text(decoder)
    elif args.command == "sweep":
        rows = run_sweep(cfg, args.threads)
        emit_csv(rows, out / cfg.output("csv", "sweep.csv"))
        if "svg" in cfg.outputs:
            emit_svg(rows, out / cfg.outputs["svg"], fit_rows(rows) if len(rows) >= 3 else None)
        for r in rows:
            print(f"kappa={r.kappa:.4f} p_sliced={r.p_sliced:.6g} p_unsliced={r.p_unsliced:.6g} ratio={r.ratio:.4g}")
    elif args.command == "multiround":
        results = run_multiround(cfg, args.threads)
        emit_multiround_csv(results, out / cfg.output("multiround", "multiround.csv"))
        for mode, res in results.items():
            print(f"{mode.value}: slope={res.slope:.4g} intercept={res.intercept:.4g}")
    elif args.command == "fit":
        rows = read_csv(_sweep_csv(cfg, out, args.threads))
        fits = fit_rows(rows, args.degree)
        doc = {k: dataclasses.asdict(f) for k, f in fits.items()}
        (out / cfg.output("fit", "fit.json")).write_text(json.dumps(doc, indent=2) + "\n")
        for k, f in fits.items():
            print(f"{k}: coefficients={list(f.coefficients)} rms={f.rms:.4g}")
    elif args.command == "plot":
        rows = read_csv(_sweep_csv(cfg, out, args.threads))
        fits = fit_rows(rows, args.degree) if len(rows) > args.degree else None
        emit_svg(rows, out / cfg.output("svg", "sweep.svg"), fits)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"numerical invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
