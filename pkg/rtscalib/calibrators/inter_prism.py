"""
Dynamic inter-prism calibration (method D).

The parameters are two yaw-constrained twists, x = [rho_12, phi_12, rho_13, phi_13].
For every synchronized sample j the residuals are

    r1 = |q1 - T_12 q2| - alpha
    r2 = |q1 - T_13 q3| - beta
    r3 = |T_12 q2 - T_13 q3| - gamma

and the cost is their mean square over the 3n residuals. It is minimized with a
damped Gauss-Newton (Levenberg-Marquardt) iteration on the analytic Jacobian.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..exceptions import ConfigError, InsufficientDataError, SolverError
from ..metrics import apparent_distances
from ..schemas import (
    CalibrationMethod,
    CalibrationResult,
    InterPrismDistances,
    SyncedTrajectories,
    Twist,
    Validation,
)
from ..se3 import (
    left_jacobian_yaw,
    left_jacobian_yaw_derivative,
    log_map,
    station_frame,
    yaw_rotation,
    yaw_rotation_derivative,
    yaw_transform,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10

# Distances below this make the distance derivative singular; such rows are zeroed.
SINGULAR_DISTANCE = 1e-12

MAX_DAMPING = 1e16
MIN_DAMPING = 1e-12


@dataclass
class SolverOutcome:
    """Raw output of the damped least-squares loop."""
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    cost_history: List[float] = field(default_factory=list)
    stalled: bool = False


def _split(x: np.ndarray) -> Tuple[np.ndarray, float, np.ndarray, float]:
    return x[0:3], x[3], x[4:7], x[7]


def pack_twists(xi_12: Twist, xi_13: Twist) -> np.ndarray:
    return np.concatenate([xi_12.as_vector(), xi_13.as_vector()])


def unpack_twists(x: np.ndarray) -> Tuple[Twist, Twist]:
    return Twist.from_vector(x[0:4]), Twist.from_vector(x[4:8])


def _residuals(x: np.ndarray, q1, q2, q3, delta: InterPrismDistances) -> np.ndarray:
    rho_12, phi_12, rho_13, phi_13 = _split(x)
    distances = apparent_distances(
        q1, q2, q3,
        yaw_transform(rho_12, phi_12, station_frame(2), station_frame(1)),
        yaw_transform(rho_13, phi_13, station_frame(3), station_frame(1)),
    )
    return (distances - delta.as_array()).reshape(-1)


def _point_jacobian(q: np.ndarray, rho: np.ndarray, phi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Transformed points T q and d(T q)/d[rho, phi] as an (n, 3, 4) array."""
    rotation = yaw_rotation(phi)
    v = left_jacobian_yaw(phi)
    moved = q @ rotation.T + v @ rho
    d_phi = q @ yaw_rotation_derivative(phi).T + left_jacobian_yaw_derivative(phi) @ rho
    jac = np.empty((len(q), 3, 4))
    jac[:, :, :3] = v
    jac[:, :, 3] = d_phi
    return moved, jac


def _unit_rows(diff: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(diff, axis=1)
    unit = np.zeros_like(diff)
    ok = norm >= SINGULAR_DISTANCE
    unit[ok] = diff[ok] / norm[ok, None]
    return unit


def _jacobian(x: np.ndarray, q1, q2, q3) -> np.ndarray:
    rho_12, phi_12, rho_13, phi_13 = _split(x)
    u, du = _point_jacobian(q2, rho_12, phi_12)
    w, dw = _point_jacobian(q3, rho_13, phi_13)
    e1 = _unit_rows(q1 - u)
    e2 = _unit_rows(q1 - w)
    e3 = _unit_rows(u - w)

    n = len(q1)
    jac = np.zeros((n, 3, 8))
    jac[:, 0, 0:4] = -np.einsum("ni,nij->nj", e1, du)
    jac[:, 1, 4:8] = -np.einsum("ni,nij->nj", e2, dw)
    jac[:, 2, 0:4] = np.einsum("ni,nij->nj", e3, du)
    jac[:, 2, 4:8] = -np.einsum("ni,nij->nj", e3, dw)
    return jac.reshape(3 * n, 8)


def _trajectories(synced: SyncedTrajectories):
    return synced.positions(1), synced.positions(2), synced.positions(3)


def inter_prism_residual_vector(
    xi_12: Twist, xi_13: Twist, synced: SyncedTrajectories, delta: InterPrismDistances
) -> np.ndarray:
    """The 3n residuals, interleaved per sample (alpha, beta, gamma)."""
    return _residuals(pack_twists(xi_12, xi_13), *_trajectories(synced), delta)


def inter_prism_jacobian(
    xi_12: Twist, xi_13: Twist, synced: SyncedTrajectories
) -> np.ndarray:
    """(3n, 8) analytic Jacobian of the residuals w.r.t. [rho_12, phi_12, rho_13, phi_13]."""
    return _jacobian(pack_twists(xi_12, xi_13), *_trajectories(synced))


def inter_prism_cost(
    xi_12: Twist, xi_13: Twist, synced: SyncedTrajectories, delta: InterPrismDistances
) -> float:
    """
    Mean squared inter-prism residual, (1 / 3n) sum of the 3n squared residuals (m^2).
    """
    residuals = inter_prism_residual_vector(xi_12, xi_13, synced, delta)
    return float(np.sum(residuals ** 2) / len(residuals))


def solve_damped_least_squares(
    x0: np.ndarray,
    residual_fn,
    jacobian_fn,
    max_iterations: int = 200,
    step_tolerance: float = 1e-10,
    cost_tolerance: float = 1e-12,
    initial_damping: float = 1e-3,
    normalize_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolverOutcome:
    """
    Levenberg-Marquardt with diagonal (scale-invariant) damping.

    A step is accepted only if it does not increase the cost; rejected steps raise the
    damping tenfold, accepted ones lower it tenfold. Iteration stops when a step is
    shorter than step_tolerance or the relative cost decrease drops below
    cost_tolerance.

    Args:
        x0: Initial parameters
        residual_fn: x -> residual vector
        jacobian_fn: x -> Jacobian matrix
        max_iterations: Accepted-step budget
        step_tolerance: Step norm convergence threshold
        cost_tolerance: Relative cost change convergence threshold
        initial_damping: Starting damping factor
        normalize_fn: Maps an accepted x to an equivalent canonical x (same residuals)

    Returns:
        SolverOutcome; converged is False when the budget ran out or the gradient
        vanished only because every Jacobian row was singular

    Raises:
        SolverError: If residuals become non-finite
    """
    x = np.array(x0, dtype=float)

    def evaluate(params: np.ndarray) -> Tuple[np.ndarray, float]:
        r = residual_fn(params)
        if not np.all(np.isfinite(r)):
            raise SolverError("Non-finite residuals in damped least squares")
        return r, float(np.sum(r ** 2) / len(r))

    residuals, cost = evaluate(x)
    history = [cost]
    damping = initial_damping
    iterations = 0
    converged = False
    stalled = False

    while iterations < max_iterations:
        if cost == 0.0:
            converged = True
            break
        jac = jacobian_fn(x)
        gradient = jac.T @ residuals
        if not np.any(gradient):
            converged = bool(np.any(jac))
            if not converged:
                logger.warning("Damped least squares stopped on an all-singular Jacobian at cost %.3e", cost)
            break
        normal = jac.T @ jac
        diagonal = np.diag(normal).copy()
        diagonal = np.maximum(diagonal, 1e-12 * max(diagonal.max(), 1e-300))

        accepted = False
        tiny_step = False
        while damping <= MAX_DAMPING:
            try:
                step = np.linalg.solve(normal + damping * np.diag(diagonal), -gradient)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            if np.linalg.norm(step) < step_tolerance:
                tiny_step = True
                break
            candidate = x + step
            candidate_residuals, candidate_cost = evaluate(candidate)
            if candidate_cost <= cost:
                accepted = True
                break
            damping *= 10.0

        if tiny_step:
            converged = True
            break
        if not accepted:
            stalled = True
            logger.warning("Damped least squares stalled at cost %.3e (damping exhausted)", cost)
            break

        decrease = cost - candidate_cost
        if normalize_fn is not None:
            candidate = normalize_fn(candidate)
        x, residuals, previous, cost = candidate, candidate_residuals, cost, candidate_cost
        history.append(cost)
        iterations += 1
        damping = max(damping / 10.0, MIN_DAMPING)
        logger.debug("LM iteration %d: cost %.6e, |step| %.3e", iterations, cost, np.linalg.norm(step))

        if decrease <= cost_tolerance * previous:
            converged = True
            break

    if not converged and not stalled:
        logger.warning("Damped least squares did not converge in %d iterations", max_iterations)

    return SolverOutcome(
        x=x, cost=cost, iterations=iterations, converged=converged,
        cost_history=history, stalled=stalled,
    )


def inter_prism_calibrate(
    synced: SyncedTrajectories,
    delta: InterPrismDistances,
    prior: Tuple[Twist, Twist],
    max_iterations: int = 200,
    step_tolerance: float = 1e-10,
    cost_tolerance: float = 1e-12,
    initial_damping: float = 1e-3,
) -> CalibrationResult:
    """
    Minimize the inter-prism cost from a prior.

    Args:
        synced: Synchronized trajectories of three distinct prisms (n >= 10)
        delta: Premeasured inter-prism distances
        prior: Initial (xi_12, xi_13)
        max_iterations: Accepted-step budget
        step_tolerance: Step norm convergence threshold
        cost_tolerance: Relative cost change convergence threshold
        initial_damping: Starting damping factor

    Returns:
        CalibrationResult (validation left as unvalidated; the prior search decides)
    """
    if len(set(synced.prism_ids)) != 3:
        raise ConfigError(
            f"Inter-prism calibration needs three distinct prisms, stations track {synced.prism_ids}"
        )
    if len(synced) < MIN_SAMPLES:
        raise InsufficientDataError(
            f"Inter-prism calibration needs {MIN_SAMPLES} samples, got {len(synced)}"
        )

    q1, q2, q3 = _trajectories(synced)
    outcome = solve_damped_least_squares(
        pack_twists(*prior),
        lambda x: _residuals(x, q1, q2, q3, delta),
        lambda x: _jacobian(x, q1, q2, q3),
        max_iterations=max_iterations,
        step_tolerance=step_tolerance,
        cost_tolerance=cost_tolerance,
        initial_damping=initial_damping,
        normalize_fn=lambda x: pack_twists(*unpack_twists(x)),
    )

    rho_12, phi_12, rho_13, phi_13 = _split(outcome.x)
    T_12 = yaw_transform(rho_12, phi_12, station_frame(2), station_frame(1))
    T_13 = yaw_transform(rho_13, phi_13, station_frame(3), station_frame(1))
    final_12, final_13 = log_map(T_12), log_map(T_13)

    return CalibrationResult(
        method=CalibrationMethod.INTER_PRISM,
        T_12=T_12,
        T_13=T_13,
        final_cost=inter_prism_cost(final_12, final_13, synced, delta),
        residuals=inter_prism_residual_vector(final_12, final_13, synced, delta),
        iterations=outcome.iterations,
        converged=outcome.converged,
        validation=Validation.UNVALIDATED,
        cost_history=outcome.cost_history,
        metadata={"samples": len(synced), "stalled": outcome.stalled},
    )
