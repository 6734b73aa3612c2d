"""Parse and write measurement logs, GCP files and inter-prism distance files."""

import csv
import io
import logging
import math
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

from ..exceptions import IngestError
from ..schemas import (
    CartesianPoint,
    GcpSet,
    InterPrismDistances,
    MeasurementLog,
    PolarMeasurement,
    SyncedTrajectories,
)

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO]

LOG_COLUMNS = ["time_s", "azimuth_deg", "elevation_deg", "range_m", "prism_id"]
GCP_COLUMNS = ["label", "x_m", "y_m", "z_m"]
DISTANCE_KEYS = ("alpha_m", "beta_m", "gamma_m")

DUPLICATE_TIME_TOLERANCE = 1e-6  # seconds
MALFORMED_FRACTION = 0.10


def _read_text(source: Source) -> Tuple[str, str]:
    """Return (content, display name) of a path or a text/byte stream."""
    if hasattr(source, "read"):
        data = source.read()
        name = getattr(source, "name", "<stream>")
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as e:
                raise IngestError(f"{name}: not UTF-8 text ({e})") from e
        return data, str(name)

    path = Path(source)
    with open(path, "r", encoding="utf-8") as f:
        return f.read(), str(path)


def _check_malformed(name: str, malformed: int, total: int) -> None:
    if malformed == 0:
        return
    if malformed > max(1, MALFORMED_FRACTION * total):
        raise IngestError(
            f"{name}: {malformed} of {total} rows are malformed (is this the right file?)"
        )
    logger.warning("%s: skipped %d malformed row(s) of %d", name, malformed, total)


def _reader(text: str, name: str, columns: List[str]) -> csv.DictReader:
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or []]
    if not header:
        raise IngestError(f"{name}: empty file")
    missing = [c for c in columns if c not in header]
    if missing:
        raise IngestError(f"{name}: unparseable header {header}, missing {missing}")
    reader.fieldnames = header
    return reader


def _parse_prism_id(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"prism_id must be an integer, got {text}")
    return int(value)


def parse_measurement_log(source: Source, station_id: int) -> MeasurementLog:
    """
    Parse one station's measurement CSV.

    The header is ``time_s,azimuth_deg,elevation_deg,range_m,prism_id``; angles are
    converted to radians. Rows come back time-sorted, and rows closer than 1 us to an
    earlier row are dropped (first one wins).

    Args:
        source: Path or readable stream (text or bytes)
        station_id: Station that produced the log

    Returns:
        MeasurementLog with the malformed row count attached
    """
    text, name = _read_text(source)
    reader = _reader(text, name, LOG_COLUMNS)

    records: List[PolarMeasurement] = []
    malformed = 0
    total = 0
    for row in reader:
        total += 1
        try:
            if None in row or any(row.get(c) is None for c in LOG_COLUMNS):
                raise ValueError("wrong number of fields")
            records.append(
                PolarMeasurement(
                    time=float(row["time_s"]),
                    azimuth=math.radians(float(row["azimuth_deg"])),
                    elevation=math.radians(float(row["elevation_deg"])),
                    range=float(row["range_m"]),
                    station_id=station_id,
                    prism_id=_parse_prism_id(row["prism_id"]),
                )
            )
        except (TypeError, ValueError) as e:
            malformed += 1
            logger.debug("%s line %d: %s", name, reader.line_num, e)

    _check_malformed(name, malformed, total)

    records.sort(key=lambda r: r.time)
    unique: List[PolarMeasurement] = []
    for record in records:
        if unique and record.time - unique[-1].time < DUPLICATE_TIME_TOLERANCE:
            continue
        unique.append(record)

    if len(unique) < len(records):
        logger.info("%s: collapsed %d duplicate timestamp(s)", name, len(records) - len(unique))

    return MeasurementLog(station_id=station_id, records=unique, malformed_rows=malformed)


def parse_gcp_file(source: Source, frame_id: str) -> GcpSet:
    """
    Parse a ``label,x_m,y_m,z_m`` GCP CSV.

    Args:
        source: Path or readable stream
        frame_id: Frame the coordinates are expressed in

    Returns:
        GcpSet with unique labels
    """
    text, name = _read_text(source)
    reader = _reader(text, name, GCP_COLUMNS)

    points: List[CartesianPoint] = []
    seen = set()
    malformed = 0
    total = 0
    for row in reader:
        total += 1
        label = (row.get("label") or "").strip()
        if label in seen:
            raise IngestError(f"{name}: duplicate GCP label '{label}'")
        try:
            if not label:
                raise ValueError("empty label")
            position = [float(row[c]) for c in ("x_m", "y_m", "z_m")]
            points.append(
                CartesianPoint(time=0.0, position=position, frame_id=frame_id, label=label)
            )
            seen.add(label)
        except (TypeError, ValueError) as e:
            malformed += 1
            logger.debug("%s line %d: %s", name, reader.line_num, e)

    _check_malformed(name, malformed, total)

    if not points:
        raise IngestError(f"{name}: no GCPs")

    return GcpSet(frame_id=frame_id, points=points)


def parse_inter_prism_distances(source: Source) -> InterPrismDistances:
    """
    Parse ``alpha_m=``, ``beta_m=``, ``gamma_m=`` lines (blank lines and ``#`` comments ignored).
    """
    text, name = _read_text(source)

    values = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in DISTANCE_KEYS:
            raise IngestError(f"{name} line {line_number}: expected one of {DISTANCE_KEYS}")
        if key in values:
            raise IngestError(f"{name}: {key} given twice")
        try:
            values[key] = float(value)
        except ValueError as e:
            raise IngestError(f"{name} line {line_number}: {e}") from e

    missing = [k for k in DISTANCE_KEYS if k not in values]
    if missing:
        raise IngestError(f"{name}: missing {missing}")

    try:
        return InterPrismDistances(values["alpha_m"], values["beta_m"], values["gamma_m"])
    except ValueError as e:
        raise IngestError(f"{name}: {e}") from e


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_measurement_log(log: MeasurementLog, output_path: str | Path) -> None:
    """Write a log in the CSV format parse_measurement_log reads."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for r in log.records:
            writer.writerow([
                _fmt(r.time),
                _fmt(math.degrees(r.azimuth)),
                _fmt(math.degrees(r.elevation)),
                _fmt(r.range),
                r.prism_id,
            ])


def write_gcp_file(gcps: GcpSet, output_path: str | Path) -> None:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(GCP_COLUMNS)
        for point in gcps.points:
            writer.writerow([point.label] + [_fmt(v) for v in point.position])


def write_inter_prism_distances(delta: InterPrismDistances, output_path: str | Path) -> None:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8") as f:
        f.write(f"alpha_m={_fmt(delta.alpha)}\n")
        f.write(f"beta_m={_fmt(delta.beta)}\n")
        f.write(f"gamma_m={_fmt(delta.gamma)}\n")


def write_synced_trajectories(synced: SyncedTrajectories, output_path: str | Path) -> None:
    """Write the common grid and the three interpolated trajectories (station frames)."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    header = ["time_s", "interval"]
    for station_id in (1, 2, 3):
        header += [f"x{station_id}_m", f"y{station_id}_m", f"z{station_id}_m"]

    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for j, t in enumerate(synced.common_times):
            row = [_fmt(t), int(synced.interval_index[j])]
            for station_id in (1, 2, 3):
                row += [_fmt(v) for v in synced.positions(station_id)[j]]
            writer.writerow(row)


def load_station_logs(paths: List[str | Path], station_ids: Optional[List[int]] = None) -> List[MeasurementLog]:
    """Parse one log per station; station ids default to 1, 2, 3 in path order."""
    station_ids = station_ids or list(range(1, len(paths) + 1))
    return [parse_measurement_log(p, s) for p, s in zip(paths, station_ids)]
