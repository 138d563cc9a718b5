"""
Seeded instance generation for both domains.

Each instance draws from its own child of `numpy.random.SeedSequence(seed)`,
so a suite is reproducible from (domain, count, seed) and instance k does
not depend on how many retries instance k-1 needed.
"""

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from domains.errors import GenerationExhausted, InvalidInstance
from domains.locomotion import LocomotionInstance, validate_locomotion
from domains.manipulation import (
    KING_STEPS,
    ManipulationInstance,
    chebyshev,
    footprint,
    rigid_moves,
    validate_manipulation,
)

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 200
DEFAULT_GRID = {"locomotion": 10, "manipulation": 11}

Verifier = Callable[[object], bool]


def _locomotion_candidate(rng: np.random.Generator, g: int, name: str, seed: int,
                          max_density: float, max_goal_distance: int) -> LocomotionInstance:
    cx, cy = (int(v) for v in rng.integers(1, g - 1, size=2))
    legs = ((cx - 1, cy - 1, True), (cx + 1, cy - 1, True), (cx - 1, cy + 1, True), (cx + 1, cy + 1, True))

    distance = int(rng.integers(1, max_goal_distance + 1))
    dx = int(rng.integers(-distance, distance + 1))
    dy = (distance - abs(dx)) * int(rng.choice([-1, 1]))
    goal = (cx + dx, cy + dy)

    reserved = {(cx, cy), goal, *((x, y) for x, y, _ in legs)}
    density = float(rng.uniform(0.0, max_density))
    free = [(x, y) for x in range(g) for y in range(g) if (x, y) not in reserved]
    n_occupied = int(round(density * g * g))
    picks = rng.choice(len(free), size=min(n_occupied, len(free)), replace=False) if n_occupied else []
    occupied = tuple(free[int(i)] for i in picks)

    return LocomotionInstance(name=name, grid=g, seed=seed, occupied=occupied,
                              legs=legs, cm=(cx, cy), goal=goal)


def _random_pose(rng: np.random.Generator, g: int, length: int):
    x1, y1 = (int(v) for v in rng.integers(0, g, size=2))
    directions = [d for d in KING_STEPS if d != (0, 0)]
    dx, dy = directions[int(rng.integers(len(directions)))]
    return x1, y1, x1 + length * dx, y1 + length * dy


def _displaced_pose(rng: np.random.Generator, g: int, pose, moves: int):
    """Random walk of `moves` rigid payload moves inside the grid."""
    current = tuple(pose)
    for _ in range(moves):
        options = [p for p in rigid_moves(current) if all(0 <= v < g for v in p)]
        current = options[int(rng.integers(len(options)))]
    return current


def _manipulation_candidate(rng: np.random.Generator, g: int, name: str, seed: int,
                            n_objects: int, length: int, max_density: float,
                            max_goal_distance: int) -> ManipulationInstance:
    payloads, goals, taken = [], [], set()
    for _ in range(n_objects):
        start = _random_pose(rng, g, length)
        target = _displaced_pose(rng, g, start, int(rng.integers(1, max_goal_distance + 1))) \
            if all(0 <= v < g for v in start) else start
        payloads.append(start)
        goals.append(target)
        taken |= footprint(start) | footprint(target)
    if payloads == goals:
        raise ValueError("goal layout equals the start layout")

    density = float(rng.uniform(0.0, max_density))
    free = [(x, y) for x in range(g) for y in range(g) if (x, y) not in taken]
    n_obstacles = int(round(density * g * g))
    picks = rng.choice(len(free), size=min(n_obstacles, len(free)), replace=False) if n_obstacles else []
    obstacles = tuple(sorted(free[int(i)] for i in picks))

    return ManipulationInstance(name=name, grid=g, seed=seed, obstacles=obstacles,
                                payloads=tuple(payloads), goal=tuple(goals))


def generate_instance(domain: str, seed: int, name: Optional[str] = None, grid: Optional[int] = None,
                      verifier: Optional[Verifier] = None, max_attempts: int = MAX_ATTEMPTS, **options):
    if domain not in DEFAULT_GRID:
        raise ValueError(f"Unknown domain: {domain}. Supported: {sorted(DEFAULT_GRID)}")
    g = grid or DEFAULT_GRID[domain]
    name = name or f"{domain[:3]}_{seed}"
    rng = np.random.default_rng(seed)

    for attempt in range(1, max_attempts + 1):
        try:
            if domain == "locomotion":
                instance = _locomotion_candidate(
                    rng, g, name, seed,
                    max_density=options.get("max_density", 0.15),
                    max_goal_distance=options.get("max_goal_distance", 2),
                )
                validate_locomotion(instance)
            else:
                instance = _manipulation_candidate(
                    rng, g, name, seed,
                    n_objects=options.get("objects", 1),
                    length=options.get("length", 2),
                    max_density=options.get("max_density", 0.1),
                    max_goal_distance=options.get("max_goal_distance", 3),
                )
                validate_manipulation(instance)
        except (InvalidInstance, ValueError) as e:
            logger.debug("%s attempt %d rejected: %s", name, attempt, e)
            continue
        if verifier is not None and not verifier(instance):
            logger.debug("%s attempt %d rejected by verifier", name, attempt)
            continue
        return instance
    raise GenerationExhausted(domain, max_attempts)


def generate_suite(domain: str, count: int, seed: int, grid: Optional[int] = None,
                   verifier: Optional[Verifier] = None, **options) -> list:
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    children = np.random.SeedSequence(seed).spawn(count)
    suite = []
    for k, child in enumerate(children):
        child_seed = int(child.generate_state(1)[0])
        suite.append(generate_instance(domain, child_seed, name=f"{domain[:3]}_{seed}_{k:02d}",
                                       grid=grid, verifier=verifier, **options))
    logger.info("Generated %d %s instances from seed %d", len(suite), domain, seed)
    return suite


def suite_metadata(instances: Sequence) -> pd.DataFrame:
    rows = []
    for inst in instances:
        if isinstance(inst, LocomotionInstance):
            cells = len(inst.occupied)
            distance = abs(inst.cm[0] - inst.goal[0]) + abs(inst.cm[1] - inst.goal[1])
            domain, items = "locomotion", sum(1 for leg in inst.legs if leg[2])
        else:
            cells = len(inst.obstacles)
            distance = sum(max(chebyshev(p[:2], q[:2]), chebyshev(p[2:], q[2:]))
                           for p, q in zip(inst.payloads, inst.goal))
            domain, items = "manipulation", len(inst.payloads)
        rows.append({
            "instance": inst.name,
            "domain": domain,
            "grid": inst.grid,
            "seed": inst.seed,
            "obstacle_density": round(cells / (inst.grid * inst.grid), 4),
            "goal_distance": distance,
            "items": items,
        })
    return pd.DataFrame(rows, columns=["instance", "domain", "grid", "seed",
                                       "obstacle_density", "goal_distance", "items"])
