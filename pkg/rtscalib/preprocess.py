"""
Pre-processing pipeline: raw per-station logs to synchronized trajectories.

Four blocks run in order:
    1. outlier filter on range/elevation/azimuth rates (optional)
    2. split into gap-free intervals common to all three stations
    3. drop short intervals (optional)
    4. interpolate every station onto one uniform time grid
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InsufficientDataError, PipelineError
from .interpolators import get_interpolator, interpolate_linear
from .schemas import (
    CartesianPoint,
    IntervalSplit,
    InterpolationKind,
    MeasurementLog,
    PipelineConfig,
    PolarMeasurement,
    SyncedTrajectories,
    TimeInterval,
    Trajectory,
)
from .se3 import polar_to_cartesian, station_frame, wrap_angle

logger = logging.getLogger(__name__)

GRID_EPSILON = 1e-9


# =============================================================================
# Block 1: outlier filter
# =============================================================================

def _within_rates(last: PolarMeasurement, record: PolarMeasurement, cfg: PipelineConfig) -> bool:
    dt = record.time - last.time
    range_rate = abs(record.range - last.range) / dt
    elevation_rate = abs(record.elevation - last.elevation) / dt
    azimuth_rate = abs(wrap_angle(record.azimuth - last.azimuth)) / dt
    return range_rate <= cfg.tau_r and elevation_rate <= cfg.tau_e and azimuth_rate <= cfg.tau_a


def _anchor_index(records: List[PolarMeasurement], cfg: PipelineConfig) -> int:
    """First record that agrees with one of the two records after it (0 if none does)."""
    for index in range(len(records) - 1):
        if any(_within_rates(records[index], later, cfg) for later in records[index + 1:index + 3]):
            return index
    return 0


def filter_outlier_records(log: MeasurementLog, cfg: PipelineConfig) -> MeasurementLog:
    """
    Drop records whose rates relative to the last kept record exceed the thresholds.

    Rates are backward differences on raw timestamps; the azimuth difference is
    wrapped to (-pi, pi]. Comparing against the last kept record means an isolated
    spike removes only itself. The first kept record has no predecessor to be
    checked against, so filtering starts at the first record that agrees with one
    of the two records after it; everything before it is dropped.

    Args:
        log: Station log with at least 2 records
        cfg: Pipeline thresholds (tau_r, tau_e, tau_a)

    Returns:
        Log of the surviving records
    """
    if len(log) < 2:
        raise InsufficientDataError(
            f"Outlier filter needs at least 2 records, station {log.station_id} has {len(log)}"
        )

    records = log.records
    anchor = _anchor_index(records, cfg)
    kept = [records[anchor]]
    for record in records[anchor + 1:]:
        if _within_rates(kept[-1], record, cfg):
            kept.append(record)

    removed = len(log) - len(kept)
    if removed:
        logger.info("Station %d: outlier filter removed %d of %d records", log.station_id, removed, len(log))
    return MeasurementLog(station_id=log.station_id, records=kept, malformed_rows=log.malformed_rows)


def outlier_filter(log: MeasurementLog, cfg: PipelineConfig) -> List[CartesianPoint]:
    """
    Block 1: remove rate outliers and convert the survivors to Cartesian points.

    Raises:
        PipelineError: If nothing survives
    """
    filtered = filter_outlier_records(log, cfg)
    points = [polar_to_cartesian(r) for r in filtered.records]
    if not points:
        raise PipelineError(f"Station {log.station_id}: no usable records after outlier filtering")
    return points


# =============================================================================
# Blocks 2 and 3: interval splitting and filtering
# =============================================================================

def _station_runs(times: np.ndarray, tau_s: float) -> List[Tuple[float, float]]:
    """Maximal runs with consecutive gaps <= tau_s; single-sample runs are dropped."""
    if len(times) < 2:
        return []
    breaks = np.nonzero(np.diff(times) > tau_s)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(times) - 1]])
    return [(times[s], times[e]) for s, e in zip(starts, ends) if e > s]


def _intersect(a: List[Tuple[float, float]], b: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    result = []
    i = j = 0
    while i < len(a) and j < len(b):
        start = max(a[i][0], b[j][0])
        end = min(a[i][1], b[j][1])
        if end > start:
            result.append((start, end))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return result


def _support_segment(trajectory: Trajectory, interval: TimeInterval) -> Trajectory:
    times = trajectory.times
    lo = int(np.searchsorted(times, interval.start, side="right")) - 1
    hi = int(np.searchsorted(times, interval.end, side="left"))
    return trajectory.subset(slice(lo, hi + 1))


def split_intervals(trajectories: Dict[int, Trajectory], tau_s: float) -> IntervalSplit:
    """
    Block 2: intersect the gap-free runs of the three stations.

    Args:
        trajectories: Station id (1, 2, 3) -> raw Cartesian points of that station
        tau_s: Largest gap allowed inside a run, seconds

    Returns:
        Common intervals and, per station, the bracketing support of each interval

    Raises:
        PipelineError: If the stations never overlap
    """
    if sorted(trajectories) != [1, 2, 3]:
        raise PipelineError(f"Interval splitting needs stations 1, 2 and 3, got {sorted(trajectories)}")

    common = None
    for station_id in (1, 2, 3):
        runs = _station_runs(trajectories[station_id].times, tau_s)
        common = runs if common is None else _intersect(common, runs)

    if not common:
        raise PipelineError("The three stations have no common coverage")

    intervals = [TimeInterval(start, end) for start, end in common]
    segments = {
        station_id: [_support_segment(trajectories[station_id], interval) for interval in intervals]
        for station_id in (1, 2, 3)
    }
    logger.info("Split into %d common interval(s)", len(intervals))
    return IntervalSplit(intervals=intervals, segments=segments)


def filter_intervals(intervals: Sequence[TimeInterval], tau_l: float) -> List[TimeInterval]:
    """
    Block 3: keep intervals lasting at least tau_l seconds, in order.

    Raises:
        PipelineError: If every interval is shorter than tau_l
    """
    kept = [interval for interval in intervals if interval.duration >= tau_l]
    if not kept:
        raise PipelineError(f"No interval lasts at least {tau_l} s")
    return kept


# =============================================================================
# Block 4 and the full pipeline
# =============================================================================

def interval_grid(interval: TimeInterval, rate: float) -> np.ndarray:
    """Uniform grid anchored at the interval start, never past its end."""
    count = int(math.floor(interval.duration * rate + GRID_EPSILON)) + 1
    return np.minimum(interval.start + np.arange(count) / rate, interval.end)


def _points_to_trajectory(points: List[CartesianPoint], station_id: int) -> Trajectory:
    prism_ids = {p.prism_id for p in points}
    if len(prism_ids) != 1:
        raise PipelineError(f"Station {station_id} log mixes prisms {sorted(prism_ids)}")
    return Trajectory.from_points(points, station_id=station_id, prism_id=prism_ids.pop())


def run_pipeline(
    logs: Sequence[MeasurementLog],
    cfg: Optional[PipelineConfig] = None,
    max_workers: Optional[int] = None,
) -> SyncedTrajectories:
    """
    Run the four pre-processing blocks on three station logs.

    Args:
        logs: One log per station (any order, station ids 1, 2, 3)
        cfg: Pipeline configuration (defaults when None)
        max_workers: Thread count for the station x interval interpolation units

    Returns:
        Synchronized trajectories on the common grid
    """
    cfg = cfg or PipelineConfig()
    if len(logs) != 3:
        raise PipelineError(f"The pipeline needs 3 logs, got {len(logs)}")
    by_station = {log.station_id: log for log in logs}
    if sorted(by_station) != [1, 2, 3]:
        raise PipelineError(f"Logs must come from stations 1, 2 and 3, got {sorted(by_station)}")

    raw: Dict[int, Trajectory] = {}
    for station_id in (1, 2, 3):
        log = by_station[station_id]
        if cfg.enable_outlier_filter:
            points = outlier_filter(log, cfg)
        else:
            points = [polar_to_cartesian(r) for r in log.records]
            if not points:
                raise PipelineError(f"Station {station_id}: empty log")
        raw[station_id] = _points_to_trajectory(points, station_id)

    split = split_intervals(raw, cfg.tau_s)
    if cfg.enable_interval_filter:
        kept = filter_intervals(split.intervals, cfg.tau_l)
        split = split.keep([split.intervals.index(interval) for interval in kept])
        logger.info("%d interval(s) of at least %.1f s kept", len(kept), cfg.tau_l)

    grids = [interval_grid(interval, cfg.output_rate) for interval in split.intervals]
    interpolator = get_interpolator(cfg.interpolation, cfg.gp)

    def interpolate_unit(unit: Tuple[int, int]) -> np.ndarray:
        station_id, k = unit
        support = split.segments[station_id][k]
        if cfg.interpolation == InterpolationKind.GAUSSIAN_PROCESS and len(support) < 3:
            logger.warning(
                "Station %d interval %d has %d support points; using linear interpolation",
                station_id, k, len(support),
            )
            return interpolate_linear(support, grids[k]).positions
        return interpolator.interpolate(support, grids[k]).positions

    units = [(station_id, k) for station_id in (1, 2, 3) for k in range(len(split.intervals))]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(interpolate_unit, units))
    else:
        results = [interpolate_unit(unit) for unit in units]
    positions = dict(zip(units, results))

    common_times = np.concatenate(grids)
    interval_index = np.concatenate([np.full(len(g), k) for k, g in enumerate(grids)])
    trajectories = tuple(
        Trajectory(
            times=common_times,
            positions=np.vstack([positions[(station_id, k)] for k in range(len(grids))]),
            frame_id=station_frame(station_id),
            station_id=station_id,
            prism_id=raw[station_id].prism_id,
        )
        for station_id in (1, 2, 3)
    )
    logger.info("Synchronized %d samples at %.2f Hz", len(common_times), cfg.output_rate)
    return SyncedTrajectories(
        common_times=common_times,
        trajectories=trajectories,
        intervals=list(split.intervals),
        interval_index=interval_index,
    )
