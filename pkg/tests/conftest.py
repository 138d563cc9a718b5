import itertools

import pytest

from checks.modules import CheckModule
from domains.locomotion import LocomotionInstance
from domains.manipulation import ManipulationInstance
from geometry.planar import cross, on_segment
from planning.model import (
    ActionInstance,
    ActionSchema,
    ConflictingPair,
    Constraint,
    Effect,
    Fluent,
    PlanningProblem,
    State,
    apply,
    parse_action,
)

MOVES = ("jump", "right")


# a walker on 0..length: right(+1), jump(+2) and a lamp it may toggle while moving

def position(state: State) -> int:
    return state.having("at")[0].args[0]


def _moves_conflict(first, second):
    return second.name in MOVES


def _move_schema(name, stride, length):
    def ground(state):
        return [(position(state) + stride,)]

    def pre(state, args):
        return args[0] == position(state) + stride and args[0] <= length

    def eff(state, args):
        return Effect.of(adds=[Fluent("at", tuple(args))], deletes=[Fluent("at", (position(state),))])

    return ActionSchema(name, ground, pre, eff, _moves_conflict)


def _toggle_schema():
    def eff(state, args):
        lamp = Fluent("lamp")
        if state.holds("lamp"):
            return Effect.of(deletes=[lamp])
        return Effect.of(adds=[lamp])

    return ActionSchema("toggle", lambda state: [()], lambda state, args: True, eff)


def line_problem(length=4, horizon=4, bounded=False, name="line"):
    def remaining(state):
        return (length - position(state) + 1) // 2

    return PlanningProblem(
        initial=State.of([Fluent("at", (0,))]),
        goal=lambda state: position(state) == length,
        schemas=(_move_schema("jump", 2, length), _move_schema("right", 1, length), _toggle_schema()),
        horizon_max=horizon,
        remaining_bound=remaining if bounded else None,
        name=name,
    )


class StrideCheck(CheckModule):
    """Fails the strides listed in `blocked` as (from, to) pairs."""

    module_id = "L_stride"

    def __init__(self, length, blocked=()):
        self.length = length
        self.blocked = frozenset(tuple(b) for b in blocked)

    def extract_keys(self, before, actions, after):
        return {self.key(position(before), a.args[0]) for a in actions if a.name in MOVES}

    def check(self, key):
        return tuple(key.values) not in self.blocked

    def input_space(self):
        n = self.length + 1
        return (self.key(x, y) for x in range(n) for y in range(n))

    def input_space_size(self):
        return (self.length + 1) ** 2

    def key_constraints(self, key):
        x, y = key.values
        return [Constraint.of([Fluent("at", (x,))], [ActionInstance(name, (y,))]) for name in MOVES]

    def blame(self, key, before, actions, after):
        x, y = key.values
        movers = [a for a in actions if a.name in MOVES and a.args[0] == y]
        return Constraint.of([Fluent("at", (x,))], movers)


class LampCheck(CheckModule):
    """Toggling is infeasible at the positions listed in `dark`."""

    module_id = "L_lamp"

    def __init__(self, dark=()):
        self.dark = frozenset(dark)

    def extract_keys(self, before, actions, after):
        if any(a.name == "toggle" for a in actions):
            return {self.key(position(before))}
        return set()

    def check(self, key):
        return key.values[0] not in self.dark

    def blame(self, key, before, actions, after):
        return Constraint.of([Fluent("at", key.values)], [ActionInstance("toggle")])


def line_modules(length=4, blocked=(), dark=()):
    return [StrideCheck(length, blocked), LampCheck(dark)]


def oracle_plans(problem, modules, horizon=None):
    """Action sequences of every feasible history at the smallest horizon that
    has one, by exhaustive recursion with checks decided directly."""
    horizon = problem.horizon_max if horizon is None else horizon
    schemas = problem.schema_map

    def steps_from(state):
        applicable = sorted(a for s in problem.schemas for a in s.instantiate(state))

        # conflicts only grow with the set, so a rejected set ends its branch
        def grow(start, chosen):
            for i in range(start, len(applicable)):
                combo = chosen + [applicable[i]]
                try:
                    after = apply(state, combo, schemas)
                except ConflictingPair:
                    continue
                yield frozenset(combo), after
                yield from grow(i + 1, combo)

        yield from grow(0, [])

    def feasible(before, step, after):
        return all(module.check(key)
                   for module in modules
                   for key in module.extract_keys(before, step, after))

    def walk(state, remaining, prefix):
        if remaining == 0:
            if problem.goal(state):
                yield tuple(prefix)
            return
        for step, after in steps_from(state):
            if problem.violates(state, step) or not feasible(state, step, after):
                continue
            prefix.append(step)
            yield from walk(after, remaining - 1, prefix)
            prefix.pop()

    for h in range(horizon + 1):
        found = set(walk(problem.initial, h, []))
        if found:
            return found
    return set()


def steps(*groups):
    """Build an action sequence from groups of 'name(args)' strings."""
    return tuple(frozenset(parse_action(a) for a in group) for group in groups)


@pytest.fixture
def line():
    return line_problem()


@pytest.fixture
def tiny_locomotion():
    # leg 4 hangs detached; it must be placed at (1,2) or (2,2) before the
    # CM can move up onto the goal
    return LocomotionInstance(
        name="tiny_loc", grid=3, seed=1,
        legs=((0, 0, True), (2, 0, True), (0, 2, True), (2, 2, False)),
        cm=(1, 1), goal=(1, 2), horizon=3,
    )


@pytest.fixture
def walk_locomotion():
    return LocomotionInstance(
        name="walk_loc", grid=4, seed=2,
        legs=((0, 0, True), (2, 0, True), (0, 2, True), (2, 2, True)),
        cm=(1, 1), goal=(3, 1), horizon=4,
    )


@pytest.fixture
def walled_locomotion():
    # every neighbour of the goal cell is occupied
    return LocomotionInstance(
        name="walled_loc", grid=4, seed=3, occupied=((0, 3), (1, 2), (2, 3)),
        legs=((0, 0, True), (2, 0, True), (0, 2, True), (2, 2, True)),
        cm=(1, 1), goal=(1, 3), horizon=2,
    )


@pytest.fixture
def tiny_manipulation():
    # arms mirror each other about x = 2, so start and goal grips are reachable
    return ManipulationInstance(
        name="tiny_man", grid=4, seed=4,
        payloads=((1, 1, 2, 1),), goal=((1, 2, 2, 2),),
        link_len=2.5, horizon=3,
    )


@pytest.fixture
def full_manipulation():
    return ManipulationInstance(
        name="full_man", grid=11, seed=5,
        payloads=((5, 5, 6, 5),), goal=((5, 6, 6, 6),),
    )


def _in_triangle(p, a, b, c):
    if cross(a, b, c) == 0:
        return on_segment(p, a, b) or on_segment(p, b, c) or on_segment(p, a, c)
    d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def covered_by_triangles(p, points):
    """p lies in the closed convex hull of `points`: in the plane that means on
    one of them, on a segment between two or in a triangle of three."""
    pts = list(points)
    if tuple(p) in {tuple(q) for q in pts}:
        return True
    if any(on_segment(p, a, b) for a, b in itertools.combinations(pts, 2)):
        return True
    return any(_in_triangle(p, a, b, c) for a, b, c in itertools.combinations(pts, 3))
