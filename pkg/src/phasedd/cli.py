"""Command-line entry point: ``phasedd <command> [options]``.

Every command accepts ``--config FILE`` (JSON) and any number of
``--set section.field=value`` overrides, and writes ``<command>.csv`` plus
``<command>.manifest.json`` into ``--out``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import sweeps
from .config import LinkConfig, fast_profile, parse_value
from .link import run_coherent_baseline, run_link

log = logging.getLogger("phasedd")


def parse_list(text: str) -> list:
    """``"1,2,5"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        if n <= 0:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return [round(start + k * step, 12) for k in range(n)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_config(args) -> LinkConfig:
    cfg = LinkConfig.load(args.config) if args.config else LinkConfig()
    if args.fast:
        cfg = fast_profile(cfg)
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = parse_value(value)
    return cfg.replace(**overrides) if overrides else cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field by dotted path (repeatable)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--fast", action="store_true", help="2**14 payload symbols per band")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="phasedd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="one end-to-end run")

    b = sub.add_parser("baseline", parents=[common], help="coherent receiver baseline")
    b.add_argument("--dpd", action="store_true", help="predistort the baseline transmitter too")

    s = sub.add_parser("sweep-er", parents=[common], help="(ER_i, ER_o) grid")
    s.add_argument("--er-i", type=parse_list, required=True)
    s.add_argument("--er-o", type=parse_list, required=True)
    s.add_argument("--no-dpd", action="store_true")
    s.add_argument("--tune", action="store_true", help="search alpha and drive scale per point")

    s = sub.add_parser("sweep-phase", parents=[common], help="receiver phase deviation")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--dtheta", type=parse_list, help="common deviation list (deg)")
    g.add_argument("--grid", type=parse_list, help="per-branch deviation list (deg), both axes")

    s = sub.add_parser("sweep-rop", parents=[common], help="BER against received power")
    s.add_argument("--rop", type=parse_list, required=True)
    s.add_argument("--no-coherent", action="store_true")

    s = sub.add_parser("optimize-alpha", parents=[common], help="offset-correction search")
    s.add_argument("--alpha", type=parse_list, default=list(sweeps.DEFAULT_ALPHAS))
    return p


def _single(kind, cfg, fn):
    try:
        return sweeps.single_result(kind, cfg, fn(cfg))
    except Exception as exc:
        log.error("%s", exc)
        return sweeps.single_result(kind, cfg, None, error=f"{type(exc).__name__}: {exc}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"phasedd: config error: {exc}", file=sys.stderr)
        return 2

    cmd = args.command
    if cmd == "run":
        result = _single("run", cfg, run_link)
    elif cmd == "baseline":
        result = _single("baseline", cfg, lambda c: run_coherent_baseline(c, use_dpd=args.dpd))
    elif cmd == "sweep-er":
        result = sweeps.sweep_er_grid(cfg, args.er_i, args.er_o, dpd=not args.no_dpd,
                                      tune=args.tune, workers=args.workers)
    elif cmd == "sweep-phase":
        if args.dtheta is not None:
            result = sweeps.sweep_phase_deviation(cfg, dtheta_list=args.dtheta, workers=args.workers)
        else:
            result = sweeps.sweep_phase_deviation(cfg, grid=(args.grid, args.grid),
                                                  workers=args.workers)
    elif cmd == "sweep-rop":
        result = sweeps.sweep_rop(cfg, args.rop, coherent=not args.no_coherent,
                                  workers=args.workers)
    elif cmd == "optimize-alpha":
        search = sweeps.optimize_alpha(cfg, args.alpha, workers=args.workers)
        result = search.curve
        result.provenance.update(best_alpha=search.best_alpha, best_snr_db=search.best_snr_db,
                                 unimodal=search.unimodal)
        print(f"best alpha {search.best_alpha:g}: Global-SNR {search.best_snr_db:.2f} dB"
              + ("" if search.unimodal else " (curve is multi-modal)"))
    else:  # pragma: no cover - argparse enforces the choices
        raise AssertionError(cmd)

    try:
        csv_path, manifest = sweeps.emit_report(result, args.out / f"{cmd}.csv")
    except OSError as exc:
        print(f"phasedd: cannot write report: {exc}", file=sys.stderr)
        return 3
    for p in result.points:
        if p.report is not None and cmd in ("run", "baseline"):
            r = p.report
            print(f"Global-SNR {r.global_snr:.2f} dB  BER {r.ber:.3e}"
                  f"{' (censored)' if r.ber_censored else ''}  CSPR {r.cspr:.2f} dB")
    print(f"wrote {csv_path} and {manifest}")
    if result.failures:
        print(f"phasedd: {len(result.failures)} of {len(result.points)} point(s) failed",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
