"""
Demo script showing how to use rtscalib.

Simulates a figure-eight scene, synchronizes the three station logs and
calibrates them with every method. No input files are required.
"""

import dataclasses

from rtscalib.calibrators import CalibrationInputs, get_calibrator
from rtscalib.config import RunConfig
from rtscalib.metrics import gcp_metric_from_sets, inter_prism_metric
from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import CALIBRATION_METHODS, CalibrationMethod
from rtscalib.simulate import evaluate_against_truth, generate_gcp_observations, generate_scene
from rtscalib.utils import format_result, list_scenes, load_scene


def demo_scene_loading():
    """Demonstrate loading scene presets."""
    print("="*80)
    print("DEMO: Loading Scenes")
    print("="*80)

    print(f"\nAvailable presets: {', '.join(list_scenes())}")

    scene = load_scene("figure_eight").to_scene_config()
    print(f"\nLoaded scene: {scene.name}")
    print(f"   Trajectory: {scene.trajectory.value}, {scene.duration_s:.0f} s at {scene.rate_hz} Hz")
    print(f"   Noise: {scene.range_noise_m * 1000:.1f} mm range")
    for station_id, pose in enumerate(scene.station_poses, start=1):
        print(f"   rts{station_id}: ({pose.x:+.1f}, {pose.y:+.1f}, {pose.z:+.2f}) m")
    return scene


def demo_calibration(scene):
    """Calibrate one simulated run with methods A-D."""
    print("\n\n" + "="*80)
    print("DEMO: Calibrating a Simulated Run")
    print("="*80)

    config = RunConfig()
    pipeline_cfg = config.pipeline.to_pipeline_config()

    logs, truth, delta = generate_scene(scene)
    synced = run_pipeline(logs, pipeline_cfg)
    station_gcps, world = generate_gcp_observations(scene)
    print(f"\nSynchronized {len(synced)} samples over {len(synced.intervals)} interval(s)")

    shared_logs, _, _ = generate_scene(dataclasses.replace(scene, prism_assignment=(1, 1, 1)))
    shared = run_pipeline(shared_logs, pipeline_cfg)

    for method in CalibrationMethod:
        info = CALIBRATION_METHODS[method.value]
        inputs = CalibrationInputs(
            station_gcps=station_gcps,
            world=world,
            synced=shared if method == CalibrationMethod.DYNAMIC_GCP else synced,
            delta=delta,
        )
        result = get_calibrator(method, config).calibrate(inputs)
        metrics = {
            "inter_prism": inter_prism_metric(synced, result.T_12, result.T_13, delta),
            "gcp": gcp_metric_from_sets(station_gcps, result.T_12, result.T_13),
        }

        print(f"\n{info['label']}: {info['name']}")
        print(format_result(result, metrics))
        for name, (trans, rot) in evaluate_against_truth(result, truth).items():
            print(f"   {name} error vs truth: {trans * 1000:.3f} mm, {rot * 1e6:.2f} urad")


def demo_usage_example():
    """Show example command-line usage."""
    print("\n\n" + "="*80)
    print("DEMO: Command-Line Workflow")
    print("="*80)

    print("""
1. Simulate a scene:
   python -m rtscalib simulate --scene figure_eight --out runs/sim

2. Calibrate with the dynamic inter-prism method:
   python -m rtscalib calibrate --method inter_prism \\
     --logs runs/sim/rts1.csv runs/sim/rts2.csv runs/sim/rts3.csv \\
     --distances runs/sim/distances.txt --out runs/cal

3. Score the report against ground truth:
   python -m rtscalib evaluate --report runs/cal/report.txt --truth runs/sim/truth.json

4. Compare all methods over Monte-Carlo seeds:
   python -m rtscalib.compare --scene figure_eight --seeds 10 --output results/comparison
""")


if __name__ == "__main__":
    scene = demo_scene_loading()
    demo_calibration(scene)
    demo_usage_example()

    print("\n" + "="*80)
    print("Demo complete.")
    print("="*80 + "\n")
