"""Write and read calibration reports, metric samples, ground truth and run manifests."""

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..exceptions import ReportError
from ..schemas import (
    CalibrationResult,
    GroundTruth,
    InterPrismDistances,
    MetricReport,
    RigidTransform,
    RunManifest,
)
from ..se3 import log_map

Sink = Union[str, Path, IO]

REPORT_HEADER = "# rtscalib calibration report"


def _fmt(value: float) -> str:
    # 17 significant digits round-trip every double exactly
    return format(float(value), ".17g")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _require_finite(name: str, values) -> None:
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ReportError(f"Refusing to write a report with non-finite {name}")


def _transform_lines(name: str, transform: RigidTransform, leveled: bool) -> List[str]:
    lines = [
        f"[transform {name}]",
        f"from_frame={transform.from_frame}",
        f"to_frame={transform.to_frame}",
        "matrix_row_major=",
    ]
    for row in transform.as_matrix():
        lines.append(" ".join(_fmt(v) for v in row))
    if leveled:
        twist = log_map(transform)
        lines.append("twist_rho_m=" + " ".join(_fmt(v) for v in twist.rho))
        lines.append(f"twist_phi_rad={_fmt(twist.phi)}")
    return lines


def format_calibration_report(
    result: CalibrationResult,
    metrics: Optional[Dict[str, MetricReport]] = None,
    reference_line_m: Optional[float] = None,
) -> str:
    """
    Render a calibration result as the structured text report.

    Args:
        result: Calibration result (must be finite)
        metrics: Metric tag -> report to embed
        reference_line_m: Reference value printed next to every metric

    Returns:
        Report text; identical inputs always give identical text
    """
    _require_finite("cost", [result.final_cost])
    _require_finite("residuals", result.residuals)
    _require_finite("cost history", result.cost_history)

    residuals = result.residuals
    lines = [
        REPORT_HEADER,
        "[result]",
        f"method={result.method.value}",
        f"validation={result.validation.value}",
        f"converged={str(result.converged).lower()}",
        f"leveled={str(result.leveled).lower()}",
        f"iterations={result.iterations}",
        f"final_cost_m2={_fmt(result.final_cost)}",
        f"residual_count={len(residuals)}",
    ]
    if len(residuals):
        lines.append(f"residual_median_abs_m={_fmt(np.median(np.abs(residuals)))}")
        lines.append(f"residual_rms_m={_fmt(np.sqrt(np.mean(residuals ** 2)))}")
    lines += _transform_lines("T_12", result.T_12, result.leveled)
    lines += _transform_lines("T_13", result.T_13, result.leveled)

    lines.append("[cost_history]")
    lines += [_fmt(c) for c in result.cost_history]

    lines.append("[residuals]")
    lines += [_fmt(r) for r in residuals]

    lines.append("[metadata]")
    try:
        for key in sorted(result.metadata):
            encoded = json.dumps(result.metadata[key], sort_keys=True, allow_nan=False, default=_json_default)
            lines.append(f"{key}={encoded}")
    except (TypeError, ValueError) as e:
        raise ReportError(f"Metadata cannot be written: {e}") from e

    for tag in sorted(metrics or {}):
        metric = metrics[tag]
        _require_finite(f"{tag} metric", [metric.median, metric.iqr])
        lines += [
            f"[metric {tag}]",
            f"count={metric.count}",
            f"median_m={_fmt(metric.median)}",
            f"iqr_m={_fmt(metric.iqr)}",
        ]
        if reference_line_m is not None:
            lines.append(f"reference_line_m={_fmt(reference_line_m)}")

    return "\n".join(lines) + "\n"


def write_calibration_report(
    result: CalibrationResult,
    sink: Sink,
    metrics: Optional[Dict[str, MetricReport]] = None,
    reference_line_m: Optional[float] = None,
) -> None:
    """
    Write a calibration report to a path or a text stream.

    Raises:
        ReportError: If the result holds non-finite values (nothing is written)
    """
    text = format_calibration_report(result, metrics, reference_line_m)

    if hasattr(sink, "write"):
        sink.write(text)
        return

    output_path = Path(sink)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _split_sections(text: str) -> Dict[str, List[str]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != REPORT_HEADER:
        raise ReportError("Not an rtscalib calibration report (missing header)")

    sections: Dict[str, List[str]] = {}
    current = None
    for line in lines[1:]:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            if current in sections:
                raise ReportError(f"Duplicate section [{current}]")
            sections[current] = []
        elif current is None:
            raise ReportError(f"Content before the first section: {stripped}")
        else:
            sections[current].append(stripped)
    return sections


def _key_values(lines: List[str]) -> Dict[str, str]:
    values = {}
    for line in lines:
        key, sep, value = line.partition("=")
        if not sep:
            raise ReportError(f"Expected key=value, got: {line}")
        values[key] = value
    return values


def _parse_transform(lines: List[str]) -> RigidTransform:
    try:
        marker = lines.index("matrix_row_major=")
    except ValueError as e:
        raise ReportError("Transform block without matrix") from e
    header = _key_values(lines[:marker])
    rows = [[float(v) for v in line.split()] for line in lines[marker + 1:marker + 5]]
    if len(rows) != 4 or any(len(r) != 4 for r in rows):
        raise ReportError("Transform matrix must be 4x4")
    return RigidTransform.from_matrix(np.array(rows), header["from_frame"], header["to_frame"])


def parse_calibration_report(text: str) -> Tuple[CalibrationResult, Dict[str, Dict[str, float]]]:
    """
    Parse report text back into a CalibrationResult and metric summaries.

    Returns:
        (result, metric tag -> {"count", "median_m", "iqr_m", ["reference_line_m"]})
    """
    sections = _split_sections(text)
    try:
        info = _key_values(sections["result"])
        result = CalibrationResult(
            method=info["method"],
            T_12=_parse_transform(sections["transform T_12"]),
            T_13=_parse_transform(sections["transform T_13"]),
            final_cost=float(info["final_cost_m2"]),
            residuals=np.array([float(v) for v in sections.get("residuals", [])]),
            iterations=int(info["iterations"]),
            converged=info["converged"] == "true",
            validation=info["validation"],
            leveled=info["leveled"] == "true",
            cost_history=[float(v) for v in sections.get("cost_history", [])],
            metadata={k: json.loads(v) for k, v in _key_values(sections.get("metadata", [])).items()},
        )
        if int(info["residual_count"]) != len(result.residuals):
            raise ReportError("Residual count does not match the [residuals] section")

        metrics = {}
        for name, lines in sections.items():
            if name.startswith("metric "):
                values = _key_values(lines)
                summary = {k: float(v) for k, v in values.items()}
                summary["count"] = int(values["count"])
                metrics[name[len("metric "):]] = summary
    except ReportError:
        raise
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise ReportError(f"Malformed calibration report: {e!r}") from e

    return result, metrics


def read_calibration_report(source: Sink) -> Tuple[CalibrationResult, Dict[str, Dict[str, float]]]:
    """Read a report from a path or a text stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(Path(source), "r", encoding="utf-8") as f:
            text = f.read()
    return parse_calibration_report(text)


def format_result(result: CalibrationResult, metrics: Optional[Dict[str, MetricReport]] = None) -> str:
    """
    Format a result as a human-readable summary.

    Args:
        result: Calibration result
        metrics: Optional metric reports

    Returns:
        Formatted string summary
    """
    summary = f"""
{'='*80}
RTSCALIB CALIBRATION RESULT
{'='*80}

Method: {result.method.value}
Validation: {result.validation.value}
Converged: {result.converged} after {result.iterations} iteration(s)
Final cost: {result.final_cost:.6e} m^2
"""
    for name, transform in (("T_12", result.T_12), ("T_13", result.T_13)):
        t = transform.translation
        summary += (
            f"  {name}: t = ({t[0]:+.4f}, {t[1]:+.4f}, {t[2]:+.4f}) m, "
            f"yaw = {math.degrees(transform.yaw):+.5f} deg\n"
        )

    if metrics:
        summary += "\nMETRICS:\n"
        for tag in sorted(metrics):
            m = metrics[tag]
            summary += f"  {tag:15s} median {m.median * 1000:8.3f} mm  IQR {m.iqr * 1000:8.3f} mm  (n={m.count})\n"

    summary += f"\n{'='*80}\n"
    return summary


def write_metric_samples(metrics: Dict[str, MetricReport], output_path: str | Path) -> None:
    """Export raw metric samples as CSV ``metric,index,residual_m`` for plotting."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["metric", "index", "residual_m"])
        for tag in sorted(metrics):
            for index, value in enumerate(metrics[tag].samples):
                writer.writerow([tag, index, _fmt(value)])


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(manifest: RunManifest, output_path: str | Path) -> None:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def _matrix(transform: RigidTransform) -> Dict[str, Any]:
    return {
        "from_frame": transform.from_frame,
        "to_frame": transform.to_frame,
        "matrix": transform.as_matrix().tolist(),
    }


def _transform(data: Dict[str, Any]) -> RigidTransform:
    return RigidTransform.from_matrix(np.array(data["matrix"]), data["from_frame"], data["to_frame"])


def write_ground_truth(truth: GroundTruth, output_path: str | Path) -> None:
    """Save a simulator oracle record as JSON."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    data = {
        "T_12": _matrix(truth.T_12),
        "T_13": _matrix(truth.T_13),
        "station_poses": [_matrix(p) for p in truth.station_poses],
        "delta": {"alpha_m": truth.delta.alpha, "beta_m": truth.delta.beta, "gamma_m": truth.delta.gamma},
        "times": truth.times.tolist(),
        "prism_world": {str(k): v.tolist() for k, v in sorted(truth.prism_world.items())},
        "outlier_indices": {str(k): list(v) for k, v in sorted(truth.outlier_indices.items())},
        "dropouts": [list(d) for d in truth.dropouts],
        "seed": truth.seed,
    }
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, default=_json_default)
        f.write("\n")


def read_ground_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ReportError(f"{path}: not a ground-truth file ({e})") from e

    try:
        delta = data["delta"]
        return GroundTruth(
            T_12=_transform(data["T_12"]),
            T_13=_transform(data["T_13"]),
            station_poses=[_transform(p) for p in data["station_poses"]],
            delta=InterPrismDistances(delta["alpha_m"], delta["beta_m"], delta["gamma_m"]),
            times=np.array(data["times"], dtype=float),
            prism_world={int(k): np.array(v, dtype=float).reshape(-1, 3) for k, v in data["prism_world"].items()},
            outlier_indices={int(k): list(v) for k, v in data.get("outlier_indices", {}).items()},
            dropouts=[tuple(d) for d in data.get("dropouts", [])],
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ReportError(f"{path}: malformed ground truth ({e!r})") from e
