import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

from config import SimulationConfig, config_echo, load_config, load_presets
from io_utils import format_key_values, to_json, write_csv
from model import LoopResponseError, validate
from scan import DEFAULT_RANGES, VERSION, ScanSpec, parse_range, run_scan, scan_spec_from_preset, shape_checks
from verify import FAST, SUITES, run_verify
from worker import ALL_OUTPUTS, ENGINES, PointResult, flatten_outputs, run_point

logger = logging.getLogger("loop_response")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_ERROR = 2
EXIT_PARTIAL = 3


def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="[%(levelname)s] %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _overrides(args) -> List[str]:
    overrides = list(args.set or [])
    if getattr(args, "mode", None):
        overrides.append(f"mode={args.mode}")
    if getattr(args, "engine", None):
        overrides.append(f"processing.engine={args.engine}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return overrides


def point_summary(cfg: SimulationConfig, point: PointResult) -> Dict:
    coeffs, response = point.coefficients, point.response
    return {
        "mode": cfg.mode,
        "branch": coeffs.branch,
        "delta": cfg.drive.delta,
        **coeffs.as_dict(),
        **response.as_dict(),
        "rho11": point.populations[0],
        "rho22": point.populations[1],
        "rho33": point.populations[2],
        "units": response.metadata["units"],
        "sqrt_branch": response.metadata["sqrt_branch"],
    }


def run_point_command(cfg: SimulationConfig, args) -> int:
    report = validate(cfg.system, cfg.drive, cfg.medium, cfg.mode)
    for w in report.warnings:
        logger.warning(w)
    if not report.ok:
        for v in report.violations:
            logger.error(v)
        return EXIT_ERROR

    point = run_point(
        cfg.system, cfg.drive, cfg.medium, cfg.mode, cfg.extraction, cfg.processing.engine, cfg.gain
    )
    summary = point_summary(cfg, point)
    if args.json:
        print(to_json(summary))
    else:
        print(format_key_values(summary), end="")

    if args.out:
        values = flatten_outputs(point, ALL_OUTPUTS)
        columns = list(values)
        write_csv(args.out, [VERSION, f"config = {config_echo(cfg)}"], columns, [[values[c] for c in columns]])
        logger.info("Point CSV: %s", args.out)
    return EXIT_OK


def _scan_spec(cfg: SimulationConfig, args) -> ScanSpec:
    if args.preset:
        presets = load_presets(cfg.presets_path)
        if args.preset not in presets:
            raise ValueError(f"unknown preset {args.preset!r}; available: {sorted(presets)}")
        spec = scan_spec_from_preset(
            args.preset, presets[args.preset], cfg.system, cfg.drive, cfg.medium, cfg.extraction, cfg.processing.engine
        )
        if args.range:
            spec = replace(spec, range=parse_range(args.range))
        return spec

    if not args.axis:
        raise ValueError("scan needs --axis or --preset")
    outputs = tuple(o.strip() for o in args.outputs.split(",")) if args.outputs else ("d21", "d32")
    return ScanSpec(
        mode=cfg.mode,
        axis=args.axis,
        range=parse_range(args.range) if args.range else DEFAULT_RANGES[args.axis],
        system=cfg.system,
        drive=cfg.drive,
        medium=cfg.medium,
        outputs=outputs,
        settings=cfg.extraction,
        engine=cfg.processing.engine,
        track_extremum=args.track_extremum,
        gain=cfg.gain,
        name=args.axis,
    )


def run_scan_command(cfg: SimulationConfig, args) -> int:
    spec = _scan_spec(cfg, args)
    workers = args.parallelism or cfg.processing.workers
    result = run_scan(spec, parallelism=workers, seed=cfg.seed)

    out = args.out or os.path.join(cfg.output.dir, cfg.output.filename_pattern.format(name=spec.name))
    write_csv(out, result.metadata(), result.columns, result.table())
    logger.info("Scan CSV: %s (%d rows, %d failed)", out, len(result.rows), result.failures)

    for check in shape_checks(result):
        log = logger.info if check.passed else logger.warning
        log("shape check %s: %s (%s)", check.name, "ok" if check.passed else "failed", check.detail)

    if result.success_fraction < 0.9:
        logger.error("only %.0f%% of rows succeeded", 100 * result.success_fraction)
        return EXIT_PARTIAL
    return EXIT_OK


def run_verify_command(cfg: SimulationConfig, args) -> int:
    presets: Optional[Dict] = None
    if os.path.exists(cfg.presets_path):
        presets = load_presets(cfg.presets_path)
    else:
        logger.warning("presets file %s not found; skipping shape checks", cfg.presets_path)
    report = run_verify(args.suite, seed=cfg.seed, presets=presets, parallelism=args.parallelism or cfg.processing.workers)
    if args.out:
        with open(args.out, "w") as f:
            f.write(to_json(report.summary()))
    failed = [o for o in report.outcomes if not o.passed]
    logger.info("verify %s (seed %d): %d properties, %d failed", report.suite, report.seed, len(report.outcomes), len(failed))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def parse_args(argv: Optional[Sequence[str]] = None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="./config/config.yaml", help="Path to YAML or JSON config.")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override any config key, e.g. drive.delta2=0.5.")
    common.add_argument("--mode", choices=["closed_loop", "incoherent"], help="Override the config mode.")
    common.add_argument("--engine", choices=list(ENGINES), help="Coefficient engine.")
    common.add_argument("--seed", type=int, default=None, help="Seed recorded in outputs and used by verify.")
    common.add_argument("--out", default=None, help="Output path.")
    common.add_argument("--verbose", action="store_true", help="Debug logging.")

    parser = argparse.ArgumentParser(description="Linear response of a closed-loop three-level ladder atom.")
    sub = parser.add_subparsers(dest="command", required=True)

    point = sub.add_parser("point", parents=[common], help="Evaluate one parameter point.")
    point.add_argument("--json", action="store_true", help="Print the summary as JSON.")

    scan = sub.add_parser("scan", parents=[common], help="Sweep one axis and write a CSV.")
    scan.add_argument("--preset", default=None, help="Named sweep preset from the presets file.")
    scan.add_argument("--axis", choices=sorted(DEFAULT_RANGES), default=None)
    scan.add_argument("--range", default=None, metavar="A:B:N", help="Sweep start:stop:count.")
    scan.add_argument("--outputs", default=None, help=f"Comma list from {', '.join(ALL_OUTPUTS)}.")
    scan.add_argument("--track-extremum", action="store_true", help="Evaluate d21/d32 at their extremal detunings.")
    scan.add_argument("--parallelism", type=int, default=None, help="Worker processes (1 = serial).")

    verify = sub.add_parser("verify", parents=[common], help="Run the property suites.")
    verify.add_argument("--suite", choices=list(SUITES), default=FAST)
    verify.add_argument("--parallelism", type=int, default=None)

    return parser.parse_args(argv)


COMMANDS = {"point": run_point_command, "scan": run_scan_command, "verify": run_verify_command}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    configure_logging(args.verbose)
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except (LoopResponseError, ValueError, FileNotFoundError, TypeError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
