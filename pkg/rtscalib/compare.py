"""
Compare calibration methods and pre-processing variants on simulated scenes.

Two experiments, each repeated over Monte-Carlo seeds:

    methods:  A-D on the same simulated data, scored by the inter-prism and GCP
              metrics and by the error against ground truth
    ablation: pipeline variants (filters on/off, linear vs GP interpolation) scored
              by the inter-prism metric under the static-GCP transforms
"""

import argparse
import dataclasses
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from rtscalib.calibrators import CalibrationInputs, get_calibrator, static_gcp_calibrate
from rtscalib.config import RunConfig, apply_overrides, load_run_config
from rtscalib.exceptions import RtsCalibError
from rtscalib.metrics import gcp_metric_from_sets, inter_prism_metric
from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import CALIBRATION_METHODS, CalibrationMethod, SceneConfig
from rtscalib.simulate import (
    derive_seeds,
    evaluate_against_truth,
    generate_gcp_observations,
    generate_scene,
)
from rtscalib.utils import load_scene

logger = logging.getLogger(__name__)

# Variant name -> pipeline overrides
ABLATION_VARIANTS = {
    "minimal": {"enable_outlier_filter": False, "enable_interval_filter": False},
    "outlier_filter": {"enable_outlier_filter": True, "enable_interval_filter": False},
    "interval_filter": {"enable_outlier_filter": False, "enable_interval_filter": True},
    "full": {"enable_outlier_filter": True, "enable_interval_filter": True},
    "full_gp": {
        "enable_outlier_filter": True,
        "enable_interval_filter": True,
        "interpolation": "gaussian_process",
    },
}


def _error_record(seed: int, name: str, error: Exception) -> Dict:
    logger.warning("Seed %d, %s failed: %s", seed, name, error)
    return {"seed": seed, "name": name, "error": f"{type(error).__name__}: {error}"}


def run_method_comparison(
    scene: SceneConfig,
    seeds: Sequence[int],
    config: Optional[RunConfig] = None,
    verbose: bool = False,
) -> Dict[str, List[Dict]]:
    """
    Run methods A-D on identical simulated data for every seed.

    Method C needs one prism shared by all stations, so it runs on a companion
    simulation with the same seed and geometry where every station tracks prism 1;
    its transforms are then scored on the three-prism data like the others.

    Args:
        scene: Scene with three distinct prisms
        seeds: Noise seeds
        config: Run configuration (defaults when None)
        verbose: Print progress

    Returns:
        Method tag -> one record per seed
    """
    config = config or RunConfig()
    pipeline_cfg = config.pipeline.to_pipeline_config()
    records: Dict[str, List[Dict]] = {method.value: [] for method in CalibrationMethod}

    for i, seed in enumerate(seeds, 1):
        if verbose:
            print(f"  [{i}/{len(seeds)}] seed {seed}")
        seeded = dataclasses.replace(scene, seed=seed)
        logs, truth, delta = generate_scene(seeded)
        synced = run_pipeline(logs, pipeline_cfg, config.pipeline.max_workers)
        station_gcps, world = generate_gcp_observations(seeded)

        shared_logs, _, _ = generate_scene(dataclasses.replace(seeded, prism_assignment=(1, 1, 1)))
        shared = run_pipeline(shared_logs, pipeline_cfg, config.pipeline.max_workers)

        for method in CalibrationMethod:
            inputs = CalibrationInputs(
                station_gcps=station_gcps,
                world=world,
                synced=shared if method == CalibrationMethod.DYNAMIC_GCP else synced,
                delta=delta,
            )
            try:
                result = get_calibrator(method, config).calibrate(inputs)
            except RtsCalibError as e:
                records[method.value].append(_error_record(seed, method.value, e))
                continue

            inter_prism = inter_prism_metric(synced, result.T_12, result.T_13, delta)
            gcp = gcp_metric_from_sets(station_gcps, result.T_12, result.T_13)
            errors = evaluate_against_truth(result, truth)
            records[method.value].append({
                "seed": seed,
                "name": method.value,
                "validation": result.validation.value,
                "inter_prism_median": inter_prism.median,
                "inter_prism_iqr": inter_prism.iqr,
                "gcp_median": gcp.median,
                "gcp_iqr": gcp.iqr,
                "trans_err_12": errors["T_12"][0],
                "rot_err_12": errors["T_12"][1],
                "trans_err_13": errors["T_13"][0],
                "rot_err_13": errors["T_13"][1],
            })

    return records


def run_pipeline_ablation(
    scene: SceneConfig,
    seeds: Sequence[int],
    config: Optional[RunConfig] = None,
    variants: Optional[Dict[str, Dict]] = None,
    verbose: bool = False,
) -> Dict[str, List[Dict]]:
    """
    Score pre-processing variants with fixed transforms.

    The transforms come from static-GCP calibration of each seed's GCP observations,
    so differences between variants come from the pipeline alone.

    Args:
        scene: Scene with three distinct prisms
        seeds: Noise seeds
        config: Base run configuration
        variants: Variant name -> pipeline overrides (``ABLATION_VARIANTS`` when None)

    Returns:
        Variant name -> one record per seed
    """
    config = config or RunConfig()
    variants = variants or ABLATION_VARIANTS
    variant_configs = {name: apply_overrides(config, overrides) for name, overrides in variants.items()}
    records: Dict[str, List[Dict]] = {name: [] for name in variants}

    for i, seed in enumerate(seeds, 1):
        if verbose:
            print(f"  [{i}/{len(seeds)}] seed {seed}")
        seeded = dataclasses.replace(scene, seed=seed)
        logs, _, delta = generate_scene(seeded)
        station_gcps, world = generate_gcp_observations(seeded)
        reference = static_gcp_calibrate(station_gcps, world, yaw_only=config.static_yaw_only)

        for name, variant in variant_configs.items():
            try:
                synced = run_pipeline(logs, variant.pipeline.to_pipeline_config(), variant.pipeline.max_workers)
            except RtsCalibError as e:
                records[name].append(_error_record(seed, name, e))
                continue
            metric = inter_prism_metric(synced, reference.T_12, reference.T_13, delta)
            records[name].append({
                "seed": seed,
                "name": name,
                "samples": len(synced),
                "inter_prism_median": metric.median,
                "inter_prism_iqr": metric.iqr,
            })

    return records


def _summary(values: List[float]) -> Dict[str, float]:
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return {"median": round(float(median), 9), "iqr": round(float(q3 - q1), 9)}


def compute_comparison_stats(all_records: Dict[str, List[Dict]], experiment: str = "methods") -> Dict:
    """
    Compute comparison statistics across methods or variants.

    Args:
        all_records: Name -> per-seed records
        experiment: "methods" or "ablation"

    Returns:
        Comparison statistics
    """
    comparison = {
        "experiment": experiment,
        "entries": {},
        "timestamp": datetime.now().isoformat(),
        "total_seeds": 0,
    }

    for name, records in all_records.items():
        completed = [r for r in records if "error" not in r]
        comparison["total_seeds"] = max(comparison["total_seeds"], len(records))
        stats = {"runs": len(records), "failures": len(records) - len(completed)}
        if not completed:
            comparison["entries"][name] = stats
            continue

        stats["inter_prism_median"] = _summary([r["inter_prism_median"] for r in completed])
        stats["inter_prism_iqr"] = _summary([r["inter_prism_iqr"] for r in completed])
        if "gcp_median" in completed[0]:
            stats["gcp_median"] = _summary([r["gcp_median"] for r in completed])
            stats["trans_err_m"] = _summary(
                [max(r["trans_err_12"], r["trans_err_13"]) for r in completed]
            )
            stats["rot_err_rad"] = _summary(
                [max(r["rot_err_12"], r["rot_err_13"]) for r in completed]
            )
            validation_counts = {}
            for record in completed:
                validation_counts[record["validation"]] = validation_counts.get(record["validation"], 0) + 1
            stats["validation"] = validation_counts
        comparison["entries"][name] = stats

    return comparison


def print_comparison_table(comparison: Dict) -> None:
    """Print a formatted comparison table."""

    print("\n" + "="*100)
    print(f"RTSCALIB {comparison['experiment'].upper()} COMPARISON")
    print("="*100)
    print(f"\nSeeds: {comparison['total_seeds']}")
    print(f"Evaluated at: {comparison['timestamp']}\n")

    print("INTER-PRISM METRIC (median over seeds of the per-run median / IQR, mm):")
    print("-" * 100)
    print(f"{'Name':<30} {'Median':<12} {'IQR':<12} {'GCP median':<14} {'Max t err (mm)':<16} {'Failures':<10}")
    print("-" * 100)

    sorted_entries = sorted(
        comparison["entries"].items(),
        key=lambda x: x[1].get("inter_prism_median", {}).get("median", float("inf")),
    )

    for name, stats in sorted_entries:
        label = name
        if name in CALIBRATION_METHODS:
            label = f"{CALIBRATION_METHODS[name]['label']}: {CALIBRATION_METHODS[name]['name']}"
        if "inter_prism_median" not in stats:
            print(f"{label:<30} {'-':<12} {'-':<12} {'-':<14} {'-':<16} {stats['failures']:<10}")
            continue

        gcp = f"{stats['gcp_median']['median'] * 1000:.3f}" if "gcp_median" in stats else "-"
        trans = f"{stats['trans_err_m']['median'] * 1000:.3f}" if "trans_err_m" in stats else "-"
        print(
            f"{label:<30} "
            f"{stats['inter_prism_median']['median'] * 1000:<12.3f} "
            f"{stats['inter_prism_iqr']['median'] * 1000:<12.3f} "
            f"{gcp:<14} "
            f"{trans:<16} "
            f"{stats['failures']:<10}"
        )

    print("-" * 100)

    validations = {name: s["validation"] for name, s in sorted_entries if "validation" in s}
    if validations:
        print("\nVALIDATION:")
        for name, counts in validations.items():
            summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
            print(f"  {name:<28} {summary}")

    print("\n" + "="*100 + "\n")


def main():
    """Main comparison function."""
    parser = argparse.ArgumentParser(
        description="Compare rtscalib calibration methods or pipeline variants on simulated scenes"
    )
    parser.add_argument(
        "--scene",
        type=str,
        default="figure_eight",
        help="Scene YAML file or preset name (default: figure_eight)"
    )
    parser.add_argument(
        "--config",
        type=str,
        help="Run configuration YAML (default: built-in defaults)"
    )
    parser.add_argument(
        "--experiment",
        choices=["methods", "ablation"],
        default="methods",
        help="Which comparison to run (default: methods)"
    )
    parser.add_argument(
        "--seeds",
        type=int,
        default=10,
        help="Number of Monte-Carlo seeds (default: 10)"
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Base seed the Monte-Carlo seeds are derived from (default: 0)"
    )
    parser.add_argument(
        "--outlier-rate",
        type=float,
        help="Override the scene's injected outlier rate"
    )
    parser.add_argument(
        "--output",
        type=str,
        default="results/comparison",
        help="Output directory for results (default: results/comparison)"
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Print detailed progress"
    )

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    try:
        config = load_run_config(args.config)
        scene = load_scene(args.scene).to_scene_config()
        if args.outlier_rate is not None:
            scene = dataclasses.replace(scene, outlier_rate=args.outlier_rate)
    except RtsCalibError as e:
        print(f"Error: {e}")
        return 2

    seeds = derive_seeds(args.seed, args.seeds)
    print(f"Running {args.experiment} comparison on scene '{scene.name}' with {len(seeds)} seed(s)...\n")

    if args.experiment == "methods":
        records = run_method_comparison(scene, seeds, config, verbose=args.verbose)
    else:
        records = run_pipeline_ablation(scene, seeds, config, verbose=args.verbose)

    comparison = compute_comparison_stats(records, args.experiment)
    comparison["scene"] = scene.name
    comparison["base_seed"] = args.seed
    comparison["records"] = records

    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    comparison_path = output_dir / "comparison.json"
    with open(comparison_path, 'w', encoding='utf-8') as f:
        json.dump(comparison, f, indent=2)
    print(f"\nComparison saved to {comparison_path}")

    print_comparison_table(comparison)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
