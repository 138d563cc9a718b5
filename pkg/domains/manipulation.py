"""
Cooperative manipulation: two arms anchored left and right of the grid carry
elongated objects between obstacles. Robot 1 grips endpoint 0, robot 2 grips
endpoint 1; objects are only moved while carried by both.

Fluents: endpoint_at(o,k,x,y), carried(o), free. One action per step.
A carried object moves rigidly: a king step of the whole object or a 45
degree turn about its midpoint.
Object-object overlap is decided at the high level through footprints;
obstacles are left to L_pay and arm collisions to L_rob.
"""

import logging
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from checks.kinematics import (
    DEFAULT_LINK_LEN,
    DEFAULT_SWEEP_SAMPLES,
    arm_links,
    l_pay,
    l_rob,
    links_collide,
)
from checks.modules import CheckKey, CheckModule
from domains.errors import InvalidInstance
from geometry.planar import Point, segment_intersects_cell
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

Cell = Tuple[int, int]
Pose = Tuple[int, int, int, int]

DEFAULT_HORIZON = 20
KING_STEPS = tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1))
# counter-clockwise (+1) and clockwise (-1) 45 degree turns, scaled by sqrt(2)
_TURNS = {1: np.array([[1, -1], [1, 1]]), -1: np.array([[1, 1], [-1, 1]])}


class ManipulationInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "manipulation"
    grid: int = Field(11, ge=2)
    seed: int = 0
    obstacles: Tuple[Cell, ...] = ()
    bases: Optional[Tuple[Cell, Cell]] = None
    # endpoint cells (x1, y1, x2, y2) per object, and the target pose of each
    payloads: Tuple[Pose, ...]
    goal: Tuple[Pose, ...]
    link_len: float = Field(DEFAULT_LINK_LEN, gt=0)
    swept: bool = False
    samples: int = Field(DEFAULT_SWEEP_SAMPLES, ge=0)
    horizon: Optional[int] = None

    @model_validator(mode="after")
    def _one_goal_per_object(self):
        if len(self.goal) != len(self.payloads):
            raise ValueError(f"{len(self.payloads)} payloads but {len(self.goal)} goal poses")
        if not self.payloads:
            raise ValueError("at least one payload is required")
        return self

    @property
    def base_cells(self) -> Tuple[Cell, Cell]:
        if self.bases is not None:
            return self.bases
        return (-1, self.grid // 2), (self.grid, self.grid // 2)

    @property
    def base_points(self) -> Tuple[Point, Point]:
        b1, b2 = self.base_cells
        return centre(b1), centre(b2)

    @property
    def objects(self) -> range:
        return range(1, len(self.payloads) + 1)


def centre(cell) -> Point:
    return Point(cell[0] + 0.5, cell[1] + 0.5)


def pose_centres(pose: Pose) -> Tuple[Point, Point]:
    return centre(pose[:2]), centre(pose[2:])


def chebyshev(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def pose_length(pose: Pose) -> int:
    return chebyshev(pose[:2], pose[2:])


def turned_pose(pose: Pose, turn: int) -> Optional[Pose]:
    """The pose turned 45 degrees about its midpoint (`turn` +1 counter-clockwise,
    -1 clockwise), rescaled to the same Chebyshev length and snapped to cells.

    Returns None when snapping changes the length."""
    ends = np.asarray(pose, dtype=float).reshape(2, 2)
    mid = ends.mean(axis=0)
    vec = _TURNS[turn] @ (ends[1] - ends[0])
    length = pose_length(pose)
    vec = vec * (length / np.abs(vec).max())
    snapped = np.floor(np.stack([mid - vec / 2, mid + vec / 2]) + 0.5).astype(int)
    turned = tuple(int(v) for v in snapped.ravel())
    return turned if pose_length(turned) == length else None


@lru_cache(maxsize=65536)
def rigid_moves(pose: Pose) -> Tuple[Pose, ...]:
    """Poses one move away: both endpoints shifted by the same king step, or a
    45 degree turn either way about the midpoint. Grid bounds are not applied."""
    x1, y1, x2, y2 = pose
    moves = [(x1 + dx, y1 + dy, x2 + dx, y2 + dy) for dx, dy in KING_STEPS if (dx, dy) != (0, 0)]
    for turn in (1, -1):
        turned = turned_pose(pose, turn)
        if turned is not None:
            moves.append(turned)
    return tuple(moves)


def move_reach(length: int) -> int:
    # a turn shifts an endpoint by at most the object's length
    return max(1, length)


@lru_cache(maxsize=65536)
def footprint(pose: Pose) -> FrozenSet[Cell]:
    """Grid cells touched by the closed segment between the endpoint centres."""
    a, b = pose_centres(pose)
    x_lo, x_hi = min(pose[0], pose[2]), max(pose[0], pose[2])
    y_lo, y_hi = min(pose[1], pose[3]), max(pose[1], pose[3])
    cells = set()
    for x in range(x_lo - 1, x_hi + 2):
        for y in range(y_lo - 1, y_hi + 2):
            if segment_intersects_cell(a, b, (x, y)):
                cells.add((x, y))
    return frozenset(cells)


def _in_grid(g: int, pose: Pose) -> bool:
    return all(0 <= v < g for v in pose)


def pose_of(state: State, obj: int) -> Pose:
    ends = {f.args[1]: f.args[2:] for f in state.having("endpoint_at") if f.args[0] == obj}
    return (*ends[0], *ends[1])


def poses(state: State) -> Dict[int, Pose]:
    ends: Dict[int, Dict[int, Cell]] = {}
    for f in state.having("endpoint_at"):
        ends.setdefault(f.args[0], {})[f.args[1]] = f.args[2:]
    return {o: (*e[0], *e[1]) for o, e in ends.items()}


def pose_fluents(obj: int, pose: Pose) -> List[Fluent]:
    return [Fluent("endpoint_at", (obj, 0, pose[0], pose[1])),
            Fluent("endpoint_at", (obj, 1, pose[2], pose[3]))]


def carried_object(state: State) -> Optional[int]:
    carried = state.having("carried")
    return carried[0].args[0] if carried else None


def validate_manipulation(instance: ManipulationInstance) -> None:
    g = instance.grid
    obstacles = set(instance.obstacles)
    for cell in obstacles:
        if not (0 <= cell[0] < g and 0 <= cell[1] < g):
            raise InvalidInstance(instance.name, f"obstacle {cell} lies outside the grid")

    base1, base2 = instance.base_points
    for label, all_poses in (("initial", instance.payloads), ("goal", instance.goal)):
        for o, pose in zip(instance.objects, all_poses):
            if not _in_grid(g, pose):
                raise InvalidInstance(instance.name, f"{label} pose of object {o} lies outside the grid")
            if pose_length(pose) == 0:
                raise InvalidInstance(instance.name, f"{label} pose of object {o} has coinciding endpoints")
            a, b = pose_centres(pose)
            if not l_pay((a, b), (a, b), obstacles):
                raise InvalidInstance(instance.name, f"{label} pose of object {o} collides with an obstacle")
            if not l_rob(a, b, base1, base2, instance.link_len):
                raise InvalidInstance(instance.name, f"arms cannot hold object {o} at its {label} pose")
        for o1, p1 in zip(instance.objects, all_poses):
            for o2, p2 in zip(instance.objects, all_poses):
                if o1 < o2 and footprint(p1) & footprint(p2):
                    raise InvalidInstance(instance.name, f"objects {o1} and {o2} overlap in the {label} layout")

    for o, start, target in zip(instance.objects, instance.payloads, instance.goal):
        if pose_length(start) != pose_length(target):
            raise InvalidInstance(instance.name, f"object {o} changes length between start and goal")


def initial_state(instance: ManipulationInstance) -> State:
    fluents = [Fluent("free")]
    for o, pose in zip(instance.objects, instance.payloads):
        fluents.extend(pose_fluents(o, pose))
    return State.of(fluents)


def _one_per_step(first: ActionInstance, second: ActionInstance) -> bool:
    return True


def build_schemas(instance: ManipulationInstance, object_collisions: bool = True) -> Tuple[ActionSchema, ...]:
    g = instance.grid
    lengths = {o: pose_length(p) for o, p in zip(instance.objects, instance.payloads)}

    def pickup_ground(state):
        return [(o,) for o in instance.objects]

    def pickup_pre(state, args):
        return state.holds("free") and args[0] in lengths

    def pickup_eff(state, args):
        return Effect.of(adds=[Fluent("carried", args)], deletes=[Fluent("free")])

    def putdown_ground(state):
        o = carried_object(state)
        return [] if o is None else [(o,)]

    def putdown_pre(state, args):
        return state.holds("carried", args[0])

    def putdown_eff(state, args):
        return Effect.of(adds=[Fluent("free")], deletes=[Fluent("carried", args)])

    def move_ground(state):
        o = carried_object(state)
        if o is None:
            return []
        return [(o, *pose) for pose in rigid_moves(pose_of(state, o))]

    def move_pre(state, args):
        o, target = args[0], tuple(args[1:])
        if not state.holds("carried", o):
            return False
        if not _in_grid(g, target) or target not in rigid_moves(pose_of(state, o)):
            return False
        if object_collisions:
            cells = footprint(target)
            for other, pose in poses(state).items():
                if other != o and cells & footprint(pose):
                    return False
        return True

    def move_eff(state, args):
        o = args[0]
        return Effect.of(adds=pose_fluents(o, tuple(args[1:])), deletes=pose_fluents(o, pose_of(state, o)))

    return (
        ActionSchema("move_payload", move_ground, move_pre, move_eff, _one_per_step),
        ActionSchema("pickup", pickup_ground, pickup_pre, pickup_eff, _one_per_step),
        ActionSchema("putdown", putdown_ground, putdown_pre, putdown_eff, _one_per_step),
    )


def build_manipulation(instance: ManipulationInstance, horizon_max: Optional[int] = None,
                       object_collisions: bool = True) -> PlanningProblem:
    validate_manipulation(instance)
    targets = {o: pose for o, pose in zip(instance.objects, instance.goal)}

    def goal_reached(state: State) -> bool:
        return state.holds("free") and all(pose_of(state, o) == p for o, p in targets.items())

    def remaining_steps(state: State) -> int:
        carried = carried_object(state)
        total = 0
        for o, pose in poses(state).items():
            target = targets[o]
            dist = max(chebyshev(pose[:2], target[:2]), chebyshev(pose[2:], target[2:]))
            if dist:
                moves = -(-dist // move_reach(pose_length(pose)))
                total += moves + (1 if o == carried else 2)
            elif o == carried:
                total += 1
        return total

    horizon = horizon_max if horizon_max is not None else (instance.horizon or DEFAULT_HORIZON)
    return PlanningProblem(
        initial=initial_state(instance),
        goal=goal_reached,
        schemas=build_schemas(instance, object_collisions),
        horizon_max=horizon,
        remaining_bound=remaining_steps,
        name=instance.name,
    )


def _pose_keys(g: int) -> Iterator[Pose]:
    for x1 in range(g):
        for y1 in range(g):
            for x2 in range(g):
                for y2 in range(g):
                    yield x1, y1, x2, y2


class PayloadCheck(CheckModule):
    """L_pay: the carried object must not touch an obstacle cell.

    By default the key is the reached pose. In swept mode it is the source
    and reached pose, and the interpolated motion between them is sampled.
    """

    module_id = "L_pay"

    def __init__(self, instance: ManipulationInstance):
        self.instance = instance
        self.swept = instance.swept
        self.obstacles = tuple(instance.obstacles)

    def extract_keys(self, before, actions, after) -> Set[CheckKey]:
        keys = set()
        for a in actions:
            if a.name != "move_payload":
                continue
            if self.swept:
                keys.add(self.key(*pose_of(before, a.args[0]), *a.args[1:]))
            else:
                keys.add(self.key(*a.args[1:]))
        return keys

    def check(self, key: CheckKey) -> bool:
        if self.swept:
            source, target = key.values[:4], key.values[4:]
        else:
            source = target = key.values
        return l_pay(pose_centres(source), pose_centres(target), self.obstacles, self.instance.samples)

    def input_space(self) -> Optional[Iterator[CheckKey]]:
        if self.swept:
            return None
        return (self.key(*pose) for pose in _pose_keys(self.instance.grid))

    def input_space_size(self) -> Optional[int]:
        return None if self.swept else self.instance.grid ** 4

    def key_constraints(self, key: CheckKey) -> List[Constraint]:
        if self.swept:
            source, target = key.values[:4], key.values[4:]
            return [Constraint.of(pose_fluents(o, source), [ActionInstance("move_payload", (o, *target))])
                    for o in self.instance.objects]
        return [Constraint.of([], [ActionInstance("move_payload", (o, *key.values))])
                for o in self.instance.objects]

    def blame(self, key, before, actions, after) -> Constraint:
        target = key.values[4:] if self.swept else key.values
        movers = [a for a in actions if a.name == "move_payload" and tuple(a.args[1:]) == tuple(target)]
        if not movers:
            return Constraint.of(before.fluents, actions)
        if self.swept:
            context = [f for a in movers for f in pose_fluents(a.args[0], pose_of(before, a.args[0]))]
            return Constraint.of(context, movers)
        return Constraint.of([], movers)


class ArmCollisionCheck(CheckModule):
    """L_rob: both arms reach their endpoint and their links stay apart.
    Keys are grip poses (x1, y1, x2, y2)."""

    module_id = "L_rob"

    def __init__(self, instance: ManipulationInstance):
        self.instance = instance

    def extract_keys(self, before, actions, after) -> Set[CheckKey]:
        keys = set()
        for a in actions:
            if a.name == "pickup":
                keys.add(self.key(*pose_of(before, a.args[0])))
            elif a.name == "move_payload":
                keys.add(self.key(*a.args[1:]))
        return keys

    def check(self, key: CheckKey) -> bool:
        grip1, grip2 = pose_centres(key.values)
        base1, base2 = self.instance.base_points
        return l_rob(grip1, grip2, base1, base2, self.instance.link_len)

    def input_space(self) -> Iterator[CheckKey]:
        return (self.key(*pose) for pose in _pose_keys(self.instance.grid))

    def input_space_size(self) -> int:
        return self.instance.grid ** 4

    def key_constraints(self, key: CheckKey) -> List[Constraint]:
        pose = key.values
        constraints = []
        for o in self.instance.objects:
            constraints.append(Constraint.of([], [ActionInstance("move_payload", (o, *pose))]))
            constraints.append(Constraint.of(pose_fluents(o, pose), [ActionInstance("pickup", (o,))]))
        return constraints

    def blame(self, key, before, actions, after) -> Constraint:
        pose = tuple(key.values)
        for a in actions:
            if a.name == "move_payload" and tuple(a.args[1:]) == pose:
                return Constraint.of([], [a])
            if a.name == "pickup" and pose_of(before, a.args[0]) == pose:
                return Constraint.of(pose_fluents(a.args[0], pose), [a])
        return Constraint.of(before.fluents, actions)

    def dedicated_table(self) -> Dict[CheckKey, bool]:
        """Solve the arm IK once per grid cell and arm, then pair the links."""
        g = self.instance.grid
        base1, base2 = self.instance.base_points
        link_len = self.instance.link_len
        cells = [(x, y) for x in range(g) for y in range(g)]
        arm1 = {c: arm_links(base1, centre(c), link_len) for c in cells}
        arm2 = {c: arm_links(base2, centre(c), link_len) for c in cells}

        table = {}
        for c1 in cells:
            links1 = arm1[c1]
            for c2 in cells:
                links2 = arm2[c2]
                ok = links1 is not None and links2 is not None and not links_collide(links1, links2)
                table[self.key(*c1, *c2)] = ok
        return table


def manipulation_modules(instance: ManipulationInstance) -> List[CheckModule]:
    return [PayloadCheck(instance), ArmCollisionCheck(instance)]
