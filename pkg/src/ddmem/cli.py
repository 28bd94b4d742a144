"""Command line interface: sweep, verify, snr, presets."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import __version__
from .config import PRESET_BUNDLES, ExperimentConfig
from .memory import MemoryParams
from .memory import snr as memory_snr
from .runner import run_sweep
from .sweep_io import read_sweep, write_sweep
from .verify import run_checks

log = logging.getLogger("ddmem")


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESET_BUNDLES), help="parameter bundle")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--sequences", help="comma-separated preset names, overrides the config")
    p.add_argument("--eps-pi", type=float, help="pulse amplitude error in units of pi")
    p.add_argument("--n-sample", type=int, help="spins in the Monte Carlo ensemble")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--m-max", type=int, help="cap the repetition axis (repetitions sweep)")
    p.add_argument("--workers", type=int, help="worker threads (DDMEM_WORKERS also works)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), help="output format")


def _build_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise SystemExit("choose either --preset or --config, not both")
    if args.config:
        cfg = ExperimentConfig.from_yaml(args.config)
    elif args.preset:
        cfg = ExperimentConfig.preset(args.preset)
    else:
        raise SystemExit("a sweep needs --preset or --config")
    overrides = {}
    if args.sequences:
        from .config import SequenceRequest

        overrides["sequences"] = tuple(
            SequenceRequest(s.strip()) for s in args.sequences.split(",") if s.strip()
        )
    if args.eps_pi is not None:
        overrides["eps"] = math.pi * args.eps_pi
    if args.n_sample is not None:
        overrides["n_sample"] = args.n_sample
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.m_max is not None:
        overrides["total_time"] = None  # replaced below
    if args.format:
        overrides["out_format"] = args.format
    if args.out:
        overrides["out_path"] = args.out
    cfg = cfg.override(**{k: v for k, v in overrides.items() if v is not None})
    if args.m_max is not None:
        # translate an m cap into a total time; with mixed block lengths the
        # shortest sequence sets the scale so nothing exceeds the cap
        shortest = min(len(s.spec(cfg.tau).phases) for s in cfg.sequences)
        cfg = cfg.override(total_time=args.m_max * shortest * cfg.tau)
    return cfg


def cmd_sweep(args) -> int:
    try:
        cfg = _build_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    data = run_sweep(cfg)
    warned = sum(1 for r in data.rows if r["guard_flag"] != "ok")
    if warned:
        log.warning("%d rows carry a collective-emission guard warning", warned)
    if cfg.out_path:
        write_sweep(data, cfg.out_path, cfg.out_format)
        print(f"wrote {len(data.rows)} rows to {cfg.out_path}")
    else:
        from .sweep_io import emit_csv, emit_jsonl

        sys.stdout.write(emit_csv(data) if cfg.out_format == "csv" else emit_jsonl(data))
    return 0


def cmd_verify(args) -> int:
    report = run_checks(args.level)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']} ({check['seconds']}s)", file=sys.stderr)
    return 0 if report["passed"] else 1


def cmd_snr(args) -> int:
    data = read_sweep(args.input)
    mem = MemoryParams(
        d_tilde=args.d_tilde, eta_d=args.eta_d, mu_in=args.mu_in,
        scheme=args.scheme, eit_c=args.eit_c,
    )
    try:
        for row in data.rows:
            row["snr"] = memory_snr(mem, row["eta_coh"], row["rho_ss"])
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    data.meta["snr_d_tilde"] = args.d_tilde
    data.meta["snr_scheme"] = args.scheme
    fmt = args.format or ("jsonl" if args.out and args.out.endswith(".jsonl") else "csv")
    if args.out:
        write_sweep(data, args.out, fmt)
        print(f"wrote {len(data.rows)} rows to {args.out}")
    else:
        from .sweep_io import emit_csv, emit_jsonl

        sys.stdout.write(emit_csv(data) if fmt == "csv" else emit_jsonl(data))
    return 0


def cmd_presets(_args) -> int:
    for name, bundle in PRESET_BUNDLES.items():
        print(f"{name}:")
        print(json.dumps(bundle, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddmem",
        description="Decoupled spin-ensemble memory noise simulator",
    )
    parser.add_argument("--version", action="version", version=f"ddmem {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a repetition or spacing sweep")
    _add_sweep_args(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the verification suite")
    p_verify.add_argument("level", choices=("fast", "full"), nargs="?", default="fast")
    p_verify.add_argument("--out", help="write the JSON report here")
    p_verify.set_defaults(fn=cmd_verify)

    p_snr = sub.add_parser("snr", help="attach memory SNR to a finished sweep")
    p_snr.add_argument("input", help="sweep file (csv or jsonl)")
    p_snr.add_argument("--d-tilde", type=float, required=True)
    p_snr.add_argument("--eta-d", type=float, default=1.0)
    p_snr.add_argument("--mu-in", type=float, default=1.0)
    p_snr.add_argument("--scheme", choices=("afc_backward", "afc_forward", "eit"),
                       default="afc_backward")
    p_snr.add_argument("--eit-c", type=float)
    p_snr.add_argument("--out")
    p_snr.add_argument("--format", choices=("csv", "jsonl"))
    p_snr.set_defaults(fn=cmd_snr)

    p_presets = sub.add_parser("presets", help="list the parameter bundles")
    p_presets.set_defaults(fn=cmd_presets)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
