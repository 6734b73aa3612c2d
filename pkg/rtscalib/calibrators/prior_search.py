"""
Velocity-thresholded prior search for the inter-prism calibration.

Samples recorded while the body moves slowly are the least affected by residual
time-synchronization and interpolation errors, so the search solves the inter-prism
problem on growing speed-filtered subsets:

    step 1: tau_v = start, start + step, ... each run seeded with the previous result
    step 2: the same thresholds, every run seeded with the best step-1 result

The best entry of a step has the lowest inter-prism metric median on the full data
(lower tau_v wins ties). Between the steps the best step-1 result is compared with
its vertical mirror image, since apparent distances alone cannot tell prisms 2 and 3
above prism 1 from the same prisms reflected below it unless the body tilts. The
final best is validated when the body turned enough, the vertical branch is
resolved, and enough other entries converged to a similar transform pair.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..config import PriorSearchSettings, SolverSettings
from ..exceptions import DegenerateGeometryError, InsufficientDataError
from ..metrics import inter_prism_metric
from ..schemas import (
    CalibrationResult,
    InterPrismDistances,
    PriorSearchDiagnostics,
    RigidTransform,
    SweepEntry,
    SyncedTrajectories,
    Trajectory,
    Twist,
    Validation,
)
from ..se3 import log_map, station_frame, transform_delta
from .alignment import point_to_point_align
from .inter_prism import inter_prism_calibrate

logger = logging.getLogger(__name__)

# Costs below this (m^2) are treated as equally exact when comparing branches.
BRANCH_COST_FLOOR = 1e-12


def point_velocities(traj: Trajectory, interval_index: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Velocity of every point, m/s.

    Central differences inside, one-sided at the ends of every segment; segments are
    delimited by changes of ``interval_index`` so gaps never produce velocities.

    Args:
        traj: Trajectory with at least 2 points
        interval_index: Optional segment label of every point

    Returns:
        (n, 3) velocities
    """
    if len(traj) < 2:
        raise InsufficientDataError("Speeds need at least 2 points")
    if interval_index is None:
        interval_index = np.zeros(len(traj), dtype=int)
    interval_index = np.asarray(interval_index)

    velocities = np.zeros((len(traj), 3))
    boundaries = np.nonzero(np.diff(interval_index))[0] + 1
    for segment in np.split(np.arange(len(traj)), boundaries):
        if len(segment) < 2:
            continue
        velocities[segment] = np.gradient(traj.positions[segment], traj.times[segment], axis=0)
    return velocities


def point_speeds(traj: Trajectory, interval_index: Optional[np.ndarray] = None) -> np.ndarray:
    """Speed of every point, m/s (norm of ``point_velocities``)."""
    return np.linalg.norm(point_velocities(traj, interval_index), axis=1)


def sample_speeds(synced: SyncedTrajectories) -> np.ndarray:
    """Per grid sample, the largest speed among the three prism trajectories."""
    return np.max(
        [point_speeds(t, synced.interval_index) for t in synced.trajectories], axis=0
    )


def _twists(T_12: RigidTransform, T_13: RigidTransform) -> Tuple[Twist, Twist]:
    return log_map(T_12), log_map(T_13)


def colocation_prior(synced: SyncedTrajectories, mask: np.ndarray) -> Tuple[Twist, Twist]:
    """
    Coarse prior treating the three prisms as one point.

    Same-index samples of the three trajectories are aligned as if the prisms were
    co-located, which is accurate to the inter-prism distances. The selected subset
    is used first, then all samples; if both are horizontally degenerate the prior
    is a pure centroid translation.
    """
    q1, q2, q3 = synced.positions(1), synced.positions(2), synced.positions(3)
    candidates = []
    if np.count_nonzero(mask) >= 2:
        candidates.append(np.asarray(mask, dtype=bool))
    candidates.append(np.ones(len(synced), dtype=bool))

    for subset in candidates:
        try:
            T_12 = point_to_point_align(q1[subset], q2[subset], yaw_only=True,
                                        from_frame=station_frame(2), to_frame=station_frame(1))
            T_13 = point_to_point_align(q1[subset], q3[subset], yaw_only=True,
                                        from_frame=station_frame(3), to_frame=station_frame(1))
            return _twists(T_12, T_13)
        except DegenerateGeometryError:
            logger.debug("Co-location prior degenerate on %d samples", np.count_nonzero(subset))

    logger.warning("Co-location prior degenerate; falling back to a centroid translation")
    centroid = q1.mean(axis=0)
    return (
        Twist(rho=centroid - q2.mean(axis=0), phi=0.0),
        Twist(rho=centroid - q3.mean(axis=0), phi=0.0),
    )


def heading_coverage(
    synced: SyncedTrajectories,
    sector_deg: float = 30.0,
    min_fraction: float = 0.02,
    min_speed: float = 0.05,
) -> float:
    """
    Angular coverage, degrees, of the direction of travel.

    The horizontal velocity heading of every prism is binned, in its own station
    frame, into sectors of ``sector_deg``; a sector counts when it holds at least
    ``min_fraction`` of the samples moving faster than ``min_speed``. The result is
    the smallest coverage of the three stations. A station's yaw shifts its headings
    without changing their spread, so no transform estimate is involved. The body is
    assumed to drive along its heading (no sideways motion).
    """
    sectors = int(round(360.0 / sector_deg))
    coverages = []
    for traj in synced.trajectories:
        velocity = point_velocities(traj, synced.interval_index)
        moving = np.hypot(velocity[:, 0], velocity[:, 1]) >= min_speed
        if not np.any(moving):
            return 0.0
        headings = np.degrees(np.arctan2(velocity[moving, 1], velocity[moving, 0]))
        counts, _ = np.histogram(headings, bins=sectors, range=(-180.0, 180.0))
        coverages.append(np.count_nonzero(counts >= min_fraction * len(headings)) * sector_deg)
    return float(min(coverages))


def mirror_vertical(
    synced: SyncedTrajectories, T_12: RigidTransform, T_13: RigidTransform
) -> Tuple[RigidTransform, RigidTransform]:
    """
    Reflect the transformed prisms 2 and 3 through the mean height of prism 1.

    Only the vertical translations change, tz -> 2 mean(q1z - qz) - tz. On flat
    ground the mirrored pair has exactly the same inter-prism cost.
    """
    q1z = synced.positions(1)[:, 2]
    mirrored = []
    for station_id, transform in ((2, T_12), (3, T_13)):
        translation = transform.translation.copy()
        translation[2] = 2.0 * float(np.mean(q1z - synced.positions(station_id)[:, 2])) - translation[2]
        mirrored.append(
            RigidTransform(transform.rotation, translation, transform.from_frame, transform.to_frame)
        )
    return mirrored[0], mirrored[1]


def _sweep_thresholds(
    speeds: np.ndarray, settings: PriorSearchSettings, robot_speed_max: float
) -> Tuple[List[Tuple[float, np.ndarray]], bool]:
    thresholds = []
    shifted = False
    k = 0
    while True:
        tau_v = settings.tau_v_start + k * settings.tau_v_step
        if tau_v > robot_speed_max + 1e-9:
            break
        k += 1
        mask = speeds <= tau_v
        if np.count_nonzero(mask) < settings.min_samples:
            shifted = True
            continue
        thresholds.append((tau_v, mask))
        if mask.all():
            break
    return thresholds, shifted


def _best_index(entries: List[SweepEntry], indices: List[int]) -> int:
    return min(indices, key=lambda i: (entries[i].metric_median, entries[i].tau_v))


def _similar(
    a_12: RigidTransform, a_13: RigidTransform, b_12: RigidTransform, b_13: RigidTransform,
    translation_m: float, rotation_rad: float,
) -> bool:
    for ta, tb in ((a_12, b_12), (a_13, b_13)):
        trans, rot = transform_delta(ta, tb)
        if trans > translation_m or rot > rotation_rad:
            return False
    return True


def search_prior(
    synced: SyncedTrajectories,
    delta: InterPrismDistances,
    robot_speed_max: Optional[float] = None,
    settings: Optional[PriorSearchSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> Tuple[Tuple[Twist, Twist], PriorSearchDiagnostics]:
    """
    Two-step velocity sweep producing a validated prior for the inter-prism solve.

    Args:
        synced: Synchronized trajectories of three distinct prisms
        delta: Premeasured inter-prism distances
        robot_speed_max: Upper end of the sweep, m/s (defaults to the settings value)
        settings: Sweep and validation settings
        solver: Damped least-squares settings of every sweep run

    Returns:
        ((xi_12, xi_13) of the best step-2 entry, diagnostics)

    Raises:
        InsufficientDataError: If no threshold selects enough samples
    """
    settings = settings or PriorSearchSettings()
    solver = solver or SolverSettings()
    robot_speed_max = robot_speed_max if robot_speed_max is not None else settings.robot_speed_max

    if len(synced) < settings.min_samples:
        raise InsufficientDataError(
            f"Prior search needs {settings.min_samples} samples, got {len(synced)}"
        )

    speeds = sample_speeds(synced)
    thresholds, shifted = _sweep_thresholds(speeds, settings, robot_speed_max)
    if not thresholds:
        raise InsufficientDataError(
            f"No speed threshold up to {robot_speed_max} m/s selects {settings.min_samples} samples"
        )

    notes = []
    if shifted:
        notes.append(
            f"sweep start shifted from {settings.tau_v_start:.2f} to {thresholds[0][0]:.2f} m/s"
        )
        logger.warning("Prior search: %s", notes[-1])

    prior = colocation_prior(synced, speeds <= settings.tau_v_start)
    solver_kwargs = solver.model_dump()
    rotation_rad = math.radians(settings.similar_rotation_deg)
    entries: List[SweepEntry] = []

    def solve(mask: np.ndarray, seed: Tuple[Twist, Twist]) -> CalibrationResult:
        return inter_prism_calibrate(synced.subset(mask), delta, seed, **solver_kwargs)

    def run(step: int, tau_v: float, mask: np.ndarray, seed: Tuple[Twist, Twist]) -> SweepEntry:
        result = solve(mask, seed)
        metric = inter_prism_metric(synced, result.T_12, result.T_13, delta)
        entry = SweepEntry(
            step=step,
            tau_v=tau_v,
            sample_count=int(np.count_nonzero(mask)),
            cost=result.final_cost,
            metric_median=metric.median,
            T_12=result.T_12,
            T_13=result.T_13,
            converged=result.converged,
            iterations=result.iterations,
        )
        logger.info(
            "Sweep step %d tau_v=%.2f m/s: %d samples, median %.3f mm",
            step, tau_v, entry.sample_count, entry.metric_median * 1000.0,
        )
        entries.append(entry)
        return entry

    seed = prior
    for tau_v, mask in thresholds:
        entry = run(1, tau_v, mask, seed)
        seed = _twists(entry.T_12, entry.T_13)
    best_step1 = _best_index(entries, list(range(len(entries))))
    step1_count = len(entries)

    # Vertical branch: refine the mirror image of the best step-1 pair on the same subset
    leader = entries[best_step1]
    leader_mask = thresholds[best_step1][1]
    mirror = solve(leader_mask, _twists(*mirror_vertical(synced.subset(leader_mask), leader.T_12, leader.T_13)))
    best_seed = _twists(leader.T_12, leader.T_13)
    switched = mirror.final_cost < leader.cost
    if switched:
        best_seed = _twists(mirror.T_12, mirror.T_13)
        notes.append(
            f"vertical branch switched to the mirrored solution "
            f"(cost {mirror.final_cost:.3e} < {leader.cost:.3e} m^2)"
        )
        logger.info("Prior search: %s", notes[-1])
    low, high = sorted((leader.cost, mirror.final_cost))
    vertical_ambiguous = (
        high <= settings.vertical_branch_cost_ratio * max(low, BRANCH_COST_FLOOR)
        and not _similar(
            leader.T_12, leader.T_13, mirror.T_12, mirror.T_13,
            settings.similar_translation_m, rotation_rad,
        )
    )

    for tau_v, mask in thresholds:
        run(2, tau_v, mask, best_seed)
    best_step2 = _best_index(entries, list(range(step1_count, len(entries))))

    best = entries[best_step2]
    similar = sum(
        1 for i, entry in enumerate(entries)
        if i != best_step2 and entry.converged and _similar(
            best.T_12, best.T_13, entry.T_12, entry.T_13, settings.similar_translation_m, rotation_rad
        )
    )
    effective = len({int(np.count_nonzero(mask)) for _, mask in thresholds})
    coverage = heading_coverage(
        synced, settings.heading_sector_deg, settings.heading_sector_min_fraction, settings.heading_min_speed
    )

    if effective <= 1:
        validation = Validation.DEGENERATE
        notes.append("insufficient speed diversity: the sweep has one effective entry")
    elif coverage < settings.min_heading_coverage_deg:
        validation = Validation.DEGENERATE
        notes.append(
            f"insufficient rotation: heading coverage {coverage:.0f} deg "
            f"< {settings.min_heading_coverage_deg:.0f} deg"
        )
    elif vertical_ambiguous:
        validation = Validation.DEGENERATE
        notes.append(
            "vertical ambiguity: the mirrored solution fits equally well "
            f"(cost {mirror.final_cost:.3e} vs {leader.cost:.3e} m^2); the body never tilted"
        )
    elif not best.converged:
        validation = Validation.UNVALIDATED
        notes.append("the best sweep entry did not converge")
    elif best.metric_median > settings.max_metric_median_m:
        validation = Validation.UNVALIDATED
        notes.append(
            f"inter-prism metric median {best.metric_median:.4f} m "
            f"exceeds {settings.max_metric_median_m:.4f} m"
        )
    elif similar >= settings.min_similar:
        validation = Validation.VALIDATED
    else:
        validation = Validation.UNVALIDATED
        notes.append(f"only {similar} similar convergence(s), need {settings.min_similar}")

    diagnostics = PriorSearchDiagnostics(
        tau_v_step=settings.tau_v_step,
        entries=entries,
        best_step1=best_step1,
        best_step2=best_step2,
        similar_convergence_count=similar,
        start_tau_v=thresholds[0][0],
        start_shifted=shifted,
        effective_entries=effective,
        heading_coverage_deg=coverage,
        mirror_cost=mirror.final_cost,
        vertical_branch_switched=switched,
        vertical_ambiguous=vertical_ambiguous,
        validation=validation,
        notes=notes,
    )
    logger.info(
        "Prior search: %s (%d similar, coverage %.0f deg)", validation.value, similar, coverage
    )
    return _twists(best.T_12, best.T_13), diagnostics
