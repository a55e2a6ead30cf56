import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np

from .schemas import PsoConfig

logger = logging.getLogger(__name__)

INITIAL_VELOCITY_FRACTION = 0.1


class PsoResult(NamedTuple):
    position: float
    value: float
    evaluations: list[tuple[float, float]]
    iterations: int
    restarts: int


def _stratified(rng: np.random.Generator, count: int, lo: float, hi: float) -> np.ndarray:
    """One uniform draw in each of `count` equal strata of [lo, hi]."""
    return lo + (np.arange(count) + rng.random(count)) / count * (hi - lo)


def _reflect(position: np.ndarray, velocity: np.ndarray, lo: float, hi: float):
    below = position < lo
    above = position > hi
    position = np.where(below, 2.0 * lo - position, position)
    position = np.where(above, 2.0 * hi - position, position)
    velocity = np.where(below | above, -velocity, velocity)
    return np.clip(position, lo, hi), velocity


def pso_minimize(
    objective: Callable[[float], float],
    lo: float,
    hi: float,
    config: PsoConfig,
    seed: int = 0,
) -> PsoResult:
    """
    Minimize a scalar function over [lo, hi] with a particle swarm.

    Initial positions are stratified over the range. Velocities are clamped
    to the range width and particles reflect off the bounds. When the best
    value has not improved by more than `config.tolerance` for
    `config.stagnation_iterations` iterations the swarm is re-seeded, up to
    `config.restarts` times.

    Args:
        objective: Function to minimize; must be finite on [lo, hi].
        lo (float): Lower bound.
        hi (float): Upper bound.
        config (PsoConfig): Swarm settings.
        seed (int): RNG seed used when `config.seed` is unset.

    Returns:
        PsoResult: Best position and value plus every evaluation in order.
    """
    rng = np.random.default_rng(config.seed if config.seed is not None else seed)
    evaluations: list[tuple[float, float]] = []

    def evaluate(points: np.ndarray) -> np.ndarray:
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                values = list(pool.map(objective, points.tolist()))
        else:
            values = [objective(point) for point in points.tolist()]
        evaluations.extend(zip(points.tolist(), values))
        return np.asarray(values, dtype=float)

    width = hi - lo
    if width <= 0.0:
        value = float(evaluate(np.array([lo]))[0])
        return PsoResult(lo, value, evaluations, 0, 0)

    count = config.swarm_size
    position = _stratified(rng, count, lo, hi)
    velocity = rng.uniform(-1.0, 1.0, count) * width * INITIAL_VELOCITY_FRACTION
    best_position = position.copy()
    best_values = evaluate(position)
    leader = int(np.argmin(best_values))
    global_position = float(best_position[leader])
    global_value = float(best_values[leader])

    def absorb(values: np.ndarray) -> bool:
        """Update personal and global bests; True when the best moved past the tolerance."""
        nonlocal global_position, global_value
        improved = values < best_values
        best_position[improved] = position[improved]
        best_values[improved] = values[improved]
        leader = int(np.argmin(best_values))
        progressed = bool(best_values[leader] < global_value - config.tolerance)
        if best_values[leader] < global_value:
            global_position = float(best_position[leader])
            global_value = float(best_values[leader])
        return progressed

    stagnant = 0
    restarts = 0
    iteration = 0
    for iteration in range(1, config.iterations + 1):
        r_cognitive = rng.random(count)
        r_social = rng.random(count)
        velocity = (
            config.inertia * velocity
            + config.cognitive * r_cognitive * (best_position - position)
            + config.social * r_social * (global_position - position)
        )
        velocity = np.clip(velocity, -width, width)
        position, velocity = _reflect(position + velocity, velocity, lo, hi)
        stagnant = 0 if absorb(evaluate(position)) else stagnant + 1

        if stagnant >= config.stagnation_iterations and restarts < config.restarts:
            restarts += 1
            stagnant = 0
            position = _stratified(rng, count, lo, hi)
            velocity = rng.uniform(-1.0, 1.0, count) * width * INITIAL_VELOCITY_FRACTION
            absorb(evaluate(position))
            logger.debug("PSO restart %d at iteration %d", restarts, iteration)

    logger.info(
        "PSO best %.6g at %.6g after %d iterations (%d evaluations)",
        global_value,
        global_position,
        iteration,
        len(evaluations),
    )
    return PsoResult(global_position, global_value, evaluations, iteration, restarts)
