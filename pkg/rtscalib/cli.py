"""
Command-line front end for rtscalib.

    python -m rtscalib.cli simulate   --config figure_eight --out runs/sim
    python -m rtscalib.cli preprocess --logs rts1.csv rts2.csv rts3.csv --out runs/pre
    python -m rtscalib.cli calibrate  --method inter_prism --logs ... --distances distances.txt --out runs/cal
    python -m rtscalib.cli evaluate   --report runs/cal/report.txt --truth runs/sim/truth.json

Exit codes:
    0  success
    1  I/O error or malformed input file
    2  configuration error or unmet method precondition
    3  inter-prism result not validated (the report is still written)
    4  solver or pipeline failure

stdout ends with one ``key=value`` summary line; everything else goes to files.
"""

import argparse
import dataclasses
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from rtscalib import __version__
from rtscalib.calibrators import CalibrationInputs, get_calibrator
from rtscalib.config import RunConfig, apply_overrides, config_snapshot, load_run_config
from rtscalib.exceptions import (
    ConfigError,
    IngestError,
    InsufficientDataError,
    ReportError,
    RtsCalibError,
)
from rtscalib.metrics import gcp_metric_from_sets, inter_prism_metric
from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import (
    CalibrationMethod,
    InterpolationKind,
    MetricKind,
    MetricReport,
    RunManifest,
    Validation,
)
from rtscalib.se3 import WORLD_FRAME, station_frame, transform_delta
from rtscalib.simulate import generate_gcp_observations, generate_scene
from rtscalib.utils import (
    format_result,
    load_scene,
    load_station_logs,
    parse_gcp_file,
    parse_inter_prism_distances,
    read_calibration_report,
    read_ground_truth,
    sha256_file,
    write_calibration_report,
    write_gcp_file,
    write_ground_truth,
    write_inter_prism_distances,
    write_manifest,
    write_measurement_log,
    write_metric_samples,
    write_synced_trajectories,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_UNVALIDATED = 3
EXIT_FAILURE = 4


def exit_code_for(error: Exception) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(error, (ConfigError, InsufficientDataError)):
        return EXIT_CONFIG
    if isinstance(error, (IngestError, ReportError, OSError)):
        return EXIT_IO
    if isinstance(error, RtsCalibError):
        return EXIT_FAILURE
    raise error


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _summary_line(**fields) -> str:
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = format(value, ".6g")
        parts.append(f"{key}={value}")
    return " ".join(parts)


def _digests(paths: List[Path]) -> Dict[str, str]:
    return {str(p): sha256_file(p) for p in paths}


def _run_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    return apply_overrides(config, {
        "tau_r": args.tau_r,
        "tau_e_deg": args.tau_e_deg,
        "tau_a_deg": args.tau_a_deg,
        "tau_s": args.tau_s,
        "tau_l": args.tau_l,
        "interpolation": args.interpolation,
        "output_rate": args.output_rate,
        "enable_outlier_filter": args.enable_outlier_filter,
        "enable_interval_filter": args.enable_interval_filter,
        "max_workers": args.max_workers,
        "robot_speed_max": args.robot_speed_max,
        "static_yaw_only": args.static_yaw_only,
        "seed": args.seed,
    })


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate a scene and write its logs, ground truth, distances and manifest."""
    started = _now()
    scene = load_scene(args.config).to_scene_config()
    if args.seed is not None:
        scene = dataclasses.replace(scene, seed=args.seed)

    print(f"Simulating scene '{scene.name}' (seed {scene.seed})...")
    logs, truth, delta = generate_scene(scene)

    out = Path(args.out)
    outputs = []
    for log in logs:
        path = out / f"rts{log.station_id}.csv"
        write_measurement_log(log, path)
        outputs.append(path)
    write_ground_truth(truth, out / "truth.json")
    write_inter_prism_distances(delta, out / "distances.txt")
    outputs += [out / "truth.json", out / "distances.txt"]

    if scene.gcp_world:
        station_gcps, world = generate_gcp_observations(scene)
        for station_id, gcps in enumerate(station_gcps, start=1):
            path = out / f"gcp_rts{station_id}.csv"
            write_gcp_file(gcps, path)
            outputs.append(path)
        write_gcp_file(world, out / "gcp_world.csv")
        outputs.append(out / "gcp_world.csv")

    scene_dict = dataclasses.asdict(scene)
    scene_dict["trajectory"] = scene.trajectory.value
    manifest = RunManifest(
        command="simulate",
        version=__version__,
        config={"scene": scene_dict},
        inputs={},
        outputs=_digests(outputs),
        seeds={"seed": scene.seed, "geometry_seed": scene.geometry_seed},
        started_at=started,
        finished_at=_now(),
    )
    write_manifest(manifest, out / "manifest.json")

    print(_summary_line(
        command="simulate",
        status="ok",
        scene=scene.name,
        seed=scene.seed,
        records=sum(len(log.records) for log in logs),
        out=str(out),
    ))
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    """Run the pre-processing pipeline and write the synchronized trajectories."""
    started = _now()
    config = _run_config(args)
    logs = load_station_logs(args.logs)

    print(f"Pre-processing {len(logs)} station logs...")
    synced = run_pipeline(logs, config.pipeline.to_pipeline_config(), config.pipeline.max_workers)

    out = Path(args.out)
    write_synced_trajectories(synced, out / "synced.csv")
    manifest = RunManifest(
        command="preprocess",
        version=__version__,
        config={"run": config_snapshot(config)},
        inputs=_digests([Path(p) for p in args.logs]),
        outputs=_digests([out / "synced.csv"]),
        seeds={"seed": config.seed},
        started_at=started,
        finished_at=_now(),
    )
    write_manifest(manifest, out / "manifest.json")

    print(_summary_line(
        command="preprocess",
        status="ok",
        samples=len(synced),
        intervals=len(synced.intervals),
        out=str(out),
    ))
    return EXIT_OK


def _metrics(inputs: CalibrationInputs, result) -> Dict[str, MetricReport]:
    metrics = {}
    synced = inputs.synced
    if synced is not None and inputs.delta is not None and len(set(synced.prism_ids)) == 3:
        metrics[MetricKind.INTER_PRISM.value] = inter_prism_metric(synced, result.T_12, result.T_13, inputs.delta)
    if inputs.station_gcps is not None:
        try:
            metrics[MetricKind.GCP.value] = gcp_metric_from_sets(inputs.station_gcps, result.T_12, result.T_13)
        except InsufficientDataError as e:
            logger.warning("GCP metric skipped: %s", e)
    return metrics


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Calibrate with one method and write the report, metric samples and manifest."""
    started = _now()
    config = _run_config(args)
    method = CalibrationMethod(args.method)
    input_paths: List[Path] = []

    inputs = CalibrationInputs()
    if args.gcp:
        inputs.station_gcps = [
            parse_gcp_file(path, station_frame(station_id))
            for station_id, path in enumerate(args.gcp, start=1)
        ]
        input_paths += [Path(p) for p in args.gcp]
    if args.world:
        inputs.world = parse_gcp_file(args.world, WORLD_FRAME)
        input_paths.append(Path(args.world))
    if args.distances:
        inputs.delta = parse_inter_prism_distances(args.distances)
        input_paths.append(Path(args.distances))

    calibrator = get_calibrator(method, config)
    if "synced" in calibrator.required_inputs:
        if not args.logs:
            raise ConfigError(f"Method {method.value} needs --logs for stations 1, 2 and 3")
        logs = load_station_logs(args.logs)
        input_paths += [Path(p) for p in args.logs]
        inputs.synced = run_pipeline(logs, config.pipeline.to_pipeline_config(), config.pipeline.max_workers)

    print(f"Calibrating with method {method.value}...")
    result = calibrator.calibrate(inputs)
    metrics = _metrics(inputs, result)

    out = Path(args.out)
    write_calibration_report(result, out / "report.txt", metrics, config.metrics.reference_line_m)
    write_metric_samples(metrics, out / "metric_samples.csv")
    outputs = [out / "report.txt", out / "metric_samples.csv"]

    manifest = RunManifest(
        command="calibrate",
        version=__version__,
        config={"method": method.value, "run": config_snapshot(config)},
        inputs=_digests(input_paths),
        outputs=_digests(outputs),
        seeds={"seed": config.seed},
        started_at=started,
        finished_at=_now(),
    )
    write_manifest(manifest, out / "manifest.json")

    if args.verbose:
        print(format_result(result, metrics))

    code = EXIT_OK
    if method == CalibrationMethod.INTER_PRISM and result.validation != Validation.VALIDATED:
        code = EXIT_UNVALIDATED

    fields = {
        "command": "calibrate",
        "status": "ok" if code == EXIT_OK else "unvalidated",
        "method": method.value,
        "validation": result.validation.value,
        "converged": str(result.converged).lower(),
        "final_cost": result.final_cost,
    }
    for tag, metric in sorted(metrics.items()):
        fields[f"{tag}_median_m"] = metric.median
    fields["exit"] = code
    print(_summary_line(**fields))
    return code


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Compare a report against ground truth or against a second report."""
    result, metrics = read_calibration_report(args.report)

    if args.truth:
        truth = read_ground_truth(args.truth)
        references = {"T_12": truth.T_12, "T_13": truth.T_13}
        against = args.truth
    else:
        other, _ = read_calibration_report(args.against)
        references = {"T_12": other.T_12, "T_13": other.T_13}
        against = args.against

    print("\n" + "="*80)
    print(f"EVALUATION: {args.report} vs {against}")
    print("="*80)
    print(f"\n{'Transform':<12} {'Translation (mm)':<20} {'Rotation (deg)':<20}")
    print("-" * 80)

    fields = {"command": "evaluate", "status": "ok"}
    for name, estimate in (("T_12", result.T_12), ("T_13", result.T_13)):
        trans, rot = transform_delta(estimate, references[name])
        print(f"{name:<12} {trans * 1000:<20.6f} {math.degrees(rot):<20.8f}")
        fields[f"trans_err_{name[2:]}_m"] = trans
        fields[f"rot_err_{name[2:]}_rad"] = rot

    if metrics:
        print(f"\n{'Metric':<15} {'Count':<10} {'Median (mm)':<15} {'IQR (mm)':<15}")
        print("-" * 80)
        for tag in sorted(metrics):
            m = metrics[tag]
            print(f"{tag:<15} {m['count']:<10} {m['median_m'] * 1000:<15.4f} {m['iqr_m'] * 1000:<15.4f}")
    print("="*80 + "\n")

    print(_summary_line(**fields))
    return EXIT_OK


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("threshold overrides")
    group.add_argument("--tau-r", type=float, help="Max range rate, m/s")
    group.add_argument("--tau-e-deg", type=float, help="Max elevation rate, deg/s")
    group.add_argument("--tau-a-deg", type=float, help="Max azimuth rate, deg/s")
    group.add_argument("--tau-s", type=float, help="Max gap inside an interval, s")
    group.add_argument("--tau-l", type=float, help="Min interval duration, s")
    group.add_argument(
        "--interpolation",
        choices=[k.value for k in InterpolationKind],
        help="Interpolation method"
    )
    group.add_argument("--output-rate", type=float, help="Common grid rate, Hz")
    group.add_argument(
        "--no-outlier-filter",
        dest="enable_outlier_filter",
        action="store_const",
        const=False,
        help="Disable the outlier filter"
    )
    group.add_argument(
        "--no-interval-filter",
        dest="enable_interval_filter",
        action="store_const",
        const=False,
        help="Disable the interval length filter"
    )
    group.add_argument("--max-workers", type=int, help="Interpolation threads")
    group.add_argument("--robot-speed-max", type=float, help="Upper end of the prior search sweep, m/s")
    group.add_argument(
        "--full-se3",
        dest="static_yaw_only",
        action="store_const",
        const=False,
        help="Estimate full 6-DOF transforms in methods B and C"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtscalib",
        description="Extrinsic calibration of robotic total stations"
    )
    parser.add_argument("--version", action="version", version=f"rtscalib {__version__}")
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Debug logging and a detailed result summary"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Simulate a scene")
    simulate.add_argument(
        "--config",
        "--scene",
        dest="config",
        type=str,
        default="figure_eight",
        help="Scene YAML file or preset name (default: figure_eight)"
    )
    simulate.add_argument("--seed", type=int, help="Override the scene's noise seed")
    simulate.add_argument("--out", type=str, required=True, help="Output directory")
    simulate.set_defaults(func=cmd_simulate)

    preprocess = subparsers.add_parser("preprocess", help="Synchronize three station logs")
    preprocess.add_argument("--logs", nargs=3, required=True, help="Logs of stations 1, 2, 3")
    preprocess.add_argument("--config", type=str, help="Run configuration YAML")
    preprocess.add_argument("--seed", type=int, help="Override the run seed")
    preprocess.add_argument("--out", type=str, required=True, help="Output directory")
    _add_override_flags(preprocess)
    preprocess.set_defaults(func=cmd_preprocess)

    calibrate = subparsers.add_parser("calibrate", help="Estimate T_12 and T_13")
    calibrate.add_argument(
        "--method",
        choices=[m.value for m in CalibrationMethod],
        required=True,
        help="Calibration method"
    )
    calibrate.add_argument("--logs", nargs=3, help="Logs of stations 1, 2, 3 (dynamic_gcp, inter_prism)")
    calibrate.add_argument("--distances", type=str, help="Inter-prism distances file (inter_prism)")
    calibrate.add_argument("--gcp", nargs=3, help="GCP files of stations 1, 2, 3 (two_point, static_gcp)")
    calibrate.add_argument("--world", type=str, help="Surveyed GCP coordinates (optional)")
    calibrate.add_argument("--config", type=str, help="Run configuration YAML")
    calibrate.add_argument("--seed", type=int, help="Override the run seed")
    calibrate.add_argument("--out", type=str, required=True, help="Output directory")
    _add_override_flags(calibrate)
    calibrate.set_defaults(func=cmd_calibrate)

    evaluate = subparsers.add_parser("evaluate", help="Compare a report with truth or another report")
    evaluate.add_argument("--report", type=str, required=True, help="Calibration report")
    reference = evaluate.add_mutually_exclusive_group(required=True)
    reference.add_argument("--truth", type=str, help="Ground truth JSON written by simulate")
    reference.add_argument("--against", type=str, help="Second calibration report")
    evaluate.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    try:
        return args.func(args)
    except (RtsCalibError, OSError) as e:
        code = exit_code_for(e)
        print(f"Error: {e}")
        print(_summary_line(command=args.command, status="error", error=type(e).__name__, exit=code))
        return code


if __name__ == "__main__":
    raise SystemExit(main())
