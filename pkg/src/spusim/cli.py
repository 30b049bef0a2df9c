"""Command-line front end.

Subcommands:

    run        execute an experiment spec and write the report directory
    jsd-sweep  exhaustive two-label divergence sweep over energy pairs
    synth      generate a synthetic model instance with ground truth
    metrics    recompute report.json from a stored experiment directory

Exit codes: 0 success, 1 runtime failure, 2 usage or input-format error.
Errors print a single ``spusim: error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    ExperimentSpec,
    SpecError,
    recompute_metrics,
    run_experiment,
    run_jsd_sweep,
)
from .metrics import SweepPipeline
from .model import PgmFormatError, build_synthetic_model, save_pgm
from .pipeline import ConfigError

USAGE_EXIT = 2
RUNTIME_EXIT = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spusim",
        description="Quantized Gibbs-sampling pipeline simulator and metrics harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("--spec", required=True, help="experiment spec JSON file")
    p_run.add_argument("--out", required=True, help="output directory")

    p_jsd = sub.add_parser("jsd-sweep", help="two-label JSD sweep over energy pairs")
    p_jsd.add_argument("--out", required=True, help="output directory")
    p_jsd.add_argument("--p-bits", type=int, default=4, choices=(4, 6, 8))
    p_jsd.add_argument(
        "--no-pow2",
        action="store_true",
        help="use exact truncated weights instead of power-of-two weights",
    )
    p_jsd.add_argument(
        "--no-dynamic-scaling",
        action="store_true",
        help="skip the energy-rescaling stage (first-generation datapath)",
    )
    p_jsd.add_argument(
        "--temperature",
        "-t",
        type=float,
        action="append",
        help="temperature to sweep (repeatable; default: 1 and 10)",
    )

    p_synth = sub.add_parser("synth", help="generate a synthetic instance")
    p_synth.add_argument(
        "--kind",
        required=True,
        choices=("two-label-denoise", "shifted-stereo"),
    )
    p_synth.add_argument("--size", type=int, default=32, help="square lattice side")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--alpha", type=float, default=1.0)
    p_synth.add_argument("--beta", type=float, default=1.0)
    p_synth.add_argument("--noise-rate", type=float, default=0.1)
    p_synth.add_argument("--labels", type=int, default=4, help="disparity count")
    p_synth.add_argument("--shift", type=int, default=2, help="true disparity")
    p_synth.add_argument("--out", required=True, help="output directory")

    p_met = sub.add_parser("metrics", help="recompute metrics from stored traces")
    p_met.add_argument("--experiment", required=True, help="experiment directory")
    p_met.add_argument(
        "--out",
        default=None,
        help="where to write the recomputed report (default: <experiment>/report_recomputed.json)",
    )
    return parser


def _cmd_run(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise SpecError(f"spec file not found: {spec_path}")
    try:
        raw = json.loads(spec_path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from exc
    spec = ExperimentSpec.from_dict(raw)
    report = run_experiment(spec, args.out)
    ok = sum(1 for e in report.design_points.values() if e["status"] == "ok")
    failed = len(report.design_points) - ok
    print(f"wrote {Path(args.out) / 'report.json'} ({ok} design points, {failed} rejected)")
    return 0


def _cmd_jsd_sweep(args) -> int:
    temps = args.temperature if args.temperature else (1.0, 10.0)
    for t in temps:
        if not t > 0:
            raise SpecError("temperatures must be positive")
    pipeline = SweepPipeline(
        kind="quantized",
        p_bits=args.p_bits,
        pow2_approx=not args.no_pow2,
        dynamic_scaling=not args.no_dynamic_scaling,
    )
    summary = run_jsd_sweep(args.out, pipeline, temperatures=temps)
    for entry in summary["grids"]:
        print(
            f"{entry['file']}: max={entry['max']:.6f} mean={entry['mean']:.6f}"
        )
    return 0


def _cmd_synth(args) -> int:
    kwargs = {"alpha": args.alpha, "beta": args.beta}
    if args.kind == "two-label-denoise":
        kwargs["noise_rate"] = args.noise_rate
    else:
        kwargs["label_count"] = args.labels
        kwargs["shift"] = args.shift
    try:
        model, truth = build_synthetic_model(args.kind, args.size, args.seed, **kwargs)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model.to_json() + "\n")
    save_pgm(out / "ground_truth.pgm", truth.grid().astype("uint8"))
    print(f"wrote {out / 'model.json'} and {out / 'ground_truth.pgm'}")
    return 0


def _cmd_metrics(args) -> int:
    exp = Path(args.experiment)
    report = recompute_metrics(exp)
    out = Path(args.out) if args.out else exp / "report_recomputed.json"
    out.write_text(report.to_json())
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "jsd-sweep": _cmd_jsd_sweep,
    "synth": _cmd_synth,
    "metrics": _cmd_metrics,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except (SpecError, ConfigError, PgmFormatError, FileNotFoundError) as exc:
        print(f"spusim: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (OSError, ValueError) as exc:
        print(f"spusim: error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
