"""
Legged locomotion: a four-legged robot walks over a grid by detaching legs,
placing them and moving its centre of mass (CM).

Fluents: leg_at(i,x,y), attached(i), detached(i), cm_at(x,y). A detached leg
keeps its last leg_at until it is placed again.
"""

import logging
from typing import Dict, Iterator, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from checks.kinematics import DEFAULT_REACH, l_bal, l_leg
from checks.modules import CheckKey, CheckModule
from domains.errors import InvalidInstance
from planning.model import (
    ActionInstance,
    ActionSchema,
    Constraint,
    Effect,
    Fluent,
    PlanningProblem,
    State,
)

logger = logging.getLogger(__name__)

LEGS = (1, 2, 3, 4)
MIN_ATTACHED = 2
DEFAULT_HORIZON = 12

Cell = Tuple[int, int]


class LocomotionInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "locomotion"
    grid: int = Field(10, ge=2)
    seed: int = 0
    occupied: Tuple[Cell, ...] = ()
    # (x, y, attached) for legs 1..4
    legs: Tuple[Tuple[int, int, bool], ...]
    cm: Cell
    goal: Cell
    reach: float = Field(DEFAULT_REACH, gt=0)
    horizon: Optional[int] = None

    @field_validator("occupied")
    @classmethod
    def _sort_cells(cls, cells):
        return tuple(sorted(set(tuple(c) for c in cells)))

    @model_validator(mode="after")
    def _four_legs(self):
        if len(self.legs) != len(LEGS):
            raise ValueError(f"expected {len(LEGS)} legs, got {len(self.legs)}")
        return self


def _in_grid(g: int, x: int, y: int) -> bool:
    return 0 <= x < g and 0 <= y < g


def validate_locomotion(instance: LocomotionInstance) -> None:
    g = instance.grid
    occupied = set(instance.occupied)
    for cell in (*occupied, instance.cm, instance.goal):
        if not _in_grid(g, *cell):
            raise InvalidInstance(instance.name, f"cell {cell} lies outside the {g}x{g} grid")
    if instance.goal in occupied:
        raise InvalidInstance(instance.name, f"goal cell {instance.goal} is occupied")
    if instance.cm in occupied:
        raise InvalidInstance(instance.name, f"CM cell {instance.cm} is occupied")

    grounded = []
    for i, (x, y, attached) in zip(LEGS, instance.legs):
        if not _in_grid(g, x, y):
            raise InvalidInstance(instance.name, f"leg {i} at {(x, y)} lies outside the grid")
        if attached:
            if (x, y) in occupied:
                raise InvalidInstance(instance.name, f"leg {i} stands on occupied cell {(x, y)}")
            if (x, y) in grounded:
                raise InvalidInstance(instance.name, f"two attached legs share cell {(x, y)}")
            if not l_leg((x, y), instance.cm, instance.reach):
                raise InvalidInstance(instance.name, f"leg {i} at {(x, y)} is out of reach of the CM")
            grounded.append((x, y))
    if len(grounded) < MIN_ATTACHED:
        raise InvalidInstance(instance.name, f"at least {MIN_ATTACHED} legs must be attached")
    if not l_bal(grounded, instance.cm):
        raise InvalidInstance(instance.name, "initial CM lies outside the support polygon")


# state accessors

def cm_of(state: State) -> Cell:
    return state.having("cm_at")[0].args


def leg_positions(state: State) -> Dict[int, Cell]:
    return {f.args[0]: (f.args[1], f.args[2]) for f in state.having("leg_at")}


def attached_legs(state: State) -> List[int]:
    return [f.args[0] for f in state.having("attached")]


def grounded_positions(state: State) -> List[Cell]:
    positions = leg_positions(state)
    return [positions[i] for i in attached_legs(state)]


def initial_state(instance: LocomotionInstance) -> State:
    fluents = [Fluent("cm_at", tuple(instance.cm))]
    for i, (x, y, attached) in zip(LEGS, instance.legs):
        fluents.append(Fluent("leg_at", (i, x, y)))
        fluents.append(Fluent("attached" if attached else "detached", (i,)))
    return State.of(fluents)


def _same_limb(first: ActionInstance, second: ActionInstance) -> bool:
    """One action per leg and one CM move per step; two legs never land on one cell."""
    if "move_cm" in (first.name, second.name):
        return first.name == second.name
    if first.args[0] == second.args[0]:
        return True
    return first.name == second.name == "place" and first.args[1:] == second.args[1:]


def _keeps_support(state: State, detaching: List[ActionInstance]) -> bool:
    # legs placed in the same step do not count as support yet
    return len(attached_legs(state)) - len(detaching) >= MIN_ATTACHED


def build_schemas(instance: LocomotionInstance) -> Tuple[ActionSchema, ...]:
    g = instance.grid
    occupied = frozenset(instance.occupied)

    def detach_ground(state):
        return [(i,) for i in attached_legs(state)]

    def detach_pre(state, args):
        return state.holds("attached", args[0]) and len(attached_legs(state)) > MIN_ATTACHED

    def detach_eff(state, args):
        i = args[0]
        return Effect.of(adds=[Fluent("detached", (i,))], deletes=[Fluent("attached", (i,))])

    def place_ground(state):
        return [(f.args[0], x, y) for f in state.having("detached") for x in range(g) for y in range(g)]

    def place_pre(state, args):
        i, x, y = args
        if not state.holds("detached", i) or not _in_grid(g, x, y) or (x, y) in occupied:
            return False
        positions = leg_positions(state)
        return all(positions[j] != (x, y) for j in attached_legs(state))

    def place_eff(state, args):
        i, x, y = args
        old = leg_positions(state)[i]
        return Effect.of(
            adds=[Fluent("leg_at", (i, x, y)), Fluent("attached", (i,))],
            deletes=[Fluent("leg_at", (i, *old)), Fluent("detached", (i,))],
        )

    def move_ground(state):
        x, y = cm_of(state)
        return [(x + dx, y + dy) for dx, dy in ((-1, 0), (0, -1), (0, 1), (1, 0))]

    def move_pre(state, args):
        x, y = args
        cx, cy = cm_of(state)
        return (abs(x - cx) + abs(y - cy) == 1 and _in_grid(g, x, y)
                and (x, y) not in occupied)

    def move_eff(state, args):
        return Effect.of(adds=[Fluent("cm_at", tuple(args))], deletes=[Fluent("cm_at", cm_of(state))])

    return (
        ActionSchema("detach", detach_ground, detach_pre, detach_eff, _same_limb, _keeps_support),
        ActionSchema("move_cm", move_ground, move_pre, move_eff, _same_limb),
        ActionSchema("place", place_ground, place_pre, place_eff, _same_limb),
    )


def build_locomotion(instance: LocomotionInstance, horizon_max: Optional[int] = None) -> PlanningProblem:
    validate_locomotion(instance)
    goal = tuple(instance.goal)
    reach_sq = instance.reach * instance.reach

    def legs_near(state, cell) -> List[int]:
        return [i for i, (x, y) in leg_positions(state).items()
                if (x - cell[0]) ** 2 + (y - cell[1]) ** 2 <= reach_sq]

    def goal_reached(state: State) -> bool:
        return (cm_of(state) == goal
                and not state.having("detached")
                and len(legs_near(state, goal)) == len(LEGS))

    def remaining_steps(state: State) -> int:
        x, y = cm_of(state)
        moves = abs(x - goal[0]) + abs(y - goal[1])
        near = set(legs_near(state, goal))
        attached = set(attached_legs(state))
        # a far attached leg needs a detach and a later place; legs and CM work in parallel
        if any(i not in near for i in attached):
            return max(moves, 2)
        if len(attached) < len(LEGS):
            return max(moves, 1)
        return moves

    horizon = horizon_max if horizon_max is not None else (instance.horizon or DEFAULT_HORIZON)
    return PlanningProblem(
        initial=initial_state(instance),
        goal=goal_reached,
        schemas=build_schemas(instance),
        horizon_max=horizon,
        remaining_bound=remaining_steps,
        name=instance.name,
    )


class BalanceCheck(CheckModule):
    """L_bal: the support polygon after the step must contain the CM both
    before and after the step. Keys are (cmx, cmy, n, legs sorted...)."""

    module_id = "L_bal"

    def __init__(self, instance: LocomotionInstance):
        self.instance = instance

    def encode(self, cm: Cell, legs) -> CheckKey:
        flat = [v for leg in sorted(legs) for v in leg]
        return self.key(cm[0], cm[1], len(legs), *flat)

    @staticmethod
    def decode(key: CheckKey):
        values = key.values
        n = values[2]
        legs = [(values[3 + 2 * k], values[4 + 2 * k]) for k in range(n)]
        return (values[0], values[1]), legs

    def extract_keys(self, before, actions, after) -> Set[CheckKey]:
        legs = grounded_positions(after)
        return {self.encode(cm_of(before), legs), self.encode(cm_of(after), legs)}

    def check(self, key: CheckKey) -> bool:
        cm, legs = self.decode(key)
        return l_bal(legs, cm)

    def blame(self, key, before, actions, after) -> Constraint:
        cm, _ = self.decode(key)
        pre_cm = cm_of(before)
        changing = {a.args[0] for a in actions if a.name in ("detach", "place")}
        producers = [a for a in actions if a.name in ("detach", "place")]
        if cm != pre_cm:
            producers += [a for a in actions if a.name == "move_cm"]
        if not producers:
            producers = list(actions)

        positions = leg_positions(before)
        context = [Fluent("cm_at", pre_cm)]
        for i in LEGS:
            if i in changing:
                continue
            if before.holds("attached", i):
                context.append(Fluent("attached", (i,)))
                context.append(Fluent("leg_at", (i, *positions[i])))
            else:
                context.append(Fluent("detached", (i,)))
        return Constraint.of(context, producers)


class LegReachCheck(CheckModule):
    """L_leg: a placed leg lands within reach of the CM. Keys are (x, y, cmx, cmy)."""

    module_id = "L_leg"

    def __init__(self, instance: LocomotionInstance):
        self.instance = instance

    def extract_keys(self, before, actions, after) -> Set[CheckKey]:
        cx, cy = cm_of(before)
        return {self.key(a.args[1], a.args[2], cx, cy) for a in actions if a.name == "place"}

    def check(self, key: CheckKey) -> bool:
        x, y, a, b = key.values
        return l_leg((x, y), (a, b), self.instance.reach)

    def input_space(self) -> Iterator[CheckKey]:
        g = self.instance.grid
        for x in range(g):
            for y in range(g):
                for a in range(g):
                    for b in range(g):
                        yield self.key(x, y, a, b)

    def input_space_size(self) -> int:
        return self.instance.grid ** 4

    def key_constraints(self, key: CheckKey) -> List[Constraint]:
        x, y, a, b = key.values
        return [Constraint.of([Fluent("cm_at", (a, b))], [ActionInstance("place", (i, x, y))])
                for i in LEGS]

    def blame(self, key, before, actions, after) -> Constraint:
        x, y, a, b = key.values
        placing = [act for act in actions if act.name == "place" and act.args[1:] == (x, y)]
        return Constraint.of([Fluent("cm_at", (a, b))], placing or list(actions))

    def dedicated_table(self) -> Dict[CheckKey, bool]:
        g = self.instance.grid
        r = self.instance.reach
        x, y, a, b = np.meshgrid(*(np.arange(g),) * 4, indexing="ij")
        dx = x - a
        dy = y - b
        ok = (dx * dx + dy * dy) <= r * r
        return {
            self.key(*idx): bool(flag)
            for idx, flag in np.ndenumerate(ok)
        }


def locomotion_modules(instance: LocomotionInstance) -> List[CheckModule]:
    return [BalanceCheck(instance), LegReachCheck(instance)]
