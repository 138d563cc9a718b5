"""
Discrete planning model: fluents, states, grounded actions, schemas,
learned constraints, problems and plan histories.

Time is positional. Fluents and actions carry no step index; a history's
i-th state and i-th action set are what the step index addresses.
"""

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple


class PreconditionViolated(ValueError):
    def __init__(self, action):
        super().__init__(f"Precondition of {action} does not hold")
        self.action = action


class ConflictingPair(ValueError):
    def __init__(self, first, second):
        super().__init__(f"Actions {first} and {second} may not co-occur")
        self.pair = (first, second)


def _render(name, args):
    return f"{name}({','.join(str(a) for a in args)})"


@dataclass(frozen=True, order=True)
class Fluent:
    name: str
    args: Tuple[int, ...] = ()

    def __str__(self):
        return _render(self.name, self.args)


@dataclass(frozen=True, order=True)
class ActionInstance:
    name: str
    args: Tuple[int, ...] = ()

    def __str__(self):
        return _render(self.name, self.args)


@dataclass(frozen=True)
class Effect:
    adds: FrozenSet[Fluent] = frozenset()
    deletes: FrozenSet[Fluent] = frozenset()

    @classmethod
    def of(cls, adds: Iterable[Fluent] = (), deletes: Iterable[Fluent] = ()):
        # a fluent both deleted and re-added by one action survives it
        adds = frozenset(adds)
        return cls(adds, frozenset(deletes) - adds)

    def clashes_with(self, other: "Effect") -> bool:
        return bool(self.adds & other.deletes or other.adds & self.deletes)


@dataclass(frozen=True)
class State:
    fluents: FrozenSet[Fluent]

    @classmethod
    def of(cls, fluents: Iterable[Fluent]):
        return cls(frozenset(fluents))

    @cached_property
    def by_name(self) -> Dict[str, List[Fluent]]:
        index: Dict[str, List[Fluent]] = {}
        for f in sorted(self.fluents):
            index.setdefault(f.name, []).append(f)
        return index

    def having(self, name: str) -> List[Fluent]:
        return self.by_name.get(name, [])

    def holds(self, name: str, *args: int) -> bool:
        return Fluent(name, tuple(args)) in self.fluents

    def __str__(self):
        return "{" + ", ".join(str(f) for f in sorted(self.fluents)) + "}"


Ground = Callable[[State], Iterable[Tuple[int, ...]]]
Precondition = Callable[[State, Tuple[int, ...]], bool]
EffectFn = Callable[[State, Tuple[int, ...]], Effect]
ConflictRule = Callable[[ActionInstance, ActionInstance], bool]
JointRule = Callable[[State, List[ActionInstance]], bool]


def _never(first: ActionInstance, second: ActionInstance) -> bool:
    return False


def _any_group(state: State, group: List[ActionInstance]) -> bool:
    return True


@dataclass(frozen=True)
class ActionSchema:
    """`ground` proposes argument tuples for a state (the parameter domains);
    `conflicts` is consulted with an instance of this schema first.

    `joint` decides whether the instances of this schema in one step may occur
    together in a state. It must stay false for every larger group once false."""
    name: str
    ground: Ground
    precondition: Precondition
    effect: EffectFn
    conflicts: ConflictRule = _never
    joint: JointRule = _any_group

    def instantiate(self, state: State) -> Iterator[ActionInstance]:
        for args in self.ground(state):
            if self.precondition(state, args):
                yield ActionInstance(self.name, tuple(args))


@dataclass(frozen=True, order=True)
class Constraint:
    """Forbids the actions in `forbidden` from co-occurring in any step whose
    state contains `context`."""
    context: FrozenSet[Fluent]
    forbidden: FrozenSet[ActionInstance]

    @classmethod
    def of(cls, context: Iterable[Fluent], forbidden: Iterable[ActionInstance]):
        return cls(frozenset(context), frozenset(forbidden))

    def violated_by(self, state: State, actions: FrozenSet[ActionInstance]) -> bool:
        return self.forbidden <= actions and self.context <= state.fluents

    def __str__(self):
        ctx = ", ".join(str(f) for f in sorted(self.context))
        acts = ", ".join(str(a) for a in sorted(self.forbidden))
        return f":- {{{ctx}}}, {{{acts}}}"


Step = FrozenSet[ActionInstance]
ActionSequence = Tuple[Step, ...]


@dataclass(frozen=True, eq=False)
class PlanningProblem:
    initial: State
    goal: Callable[[State], bool]
    schemas: Tuple[ActionSchema, ...]
    constraints: Tuple[Constraint, ...] = ()
    horizon_max: int = 12
    plan_nogoods: FrozenSet[ActionSequence] = frozenset()
    # admissible lower bound on the steps still needed from a state
    remaining_bound: Optional[Callable[[State], int]] = None
    name: str = "problem"

    @cached_property
    def schema_map(self) -> Dict[str, ActionSchema]:
        return {s.name: s for s in self.schemas}

    @cached_property
    def _constraint_index(self) -> Dict[ActionInstance, List[Constraint]]:
        index: Dict[ActionInstance, List[Constraint]] = {}
        for c in self.constraints:
            anchor = min(c.forbidden)
            index.setdefault(anchor, []).append(c)
        return index

    def violated_constraints(self, state: State, actions: Step) -> List[Constraint]:
        index = self._constraint_index
        found = []
        for action in actions:
            for c in index.get(action, ()):
                if c.violated_by(state, actions):
                    found.append(c)
        return found

    def violates(self, state: State, actions: Step) -> bool:
        index = self._constraint_index
        for action in actions:
            for c in index.get(action, ()):
                if c.violated_by(state, actions):
                    return True
        return False

    def bound(self, state: State) -> int:
        return self.remaining_bound(state) if self.remaining_bound else 0


@dataclass(frozen=True)
class PlanHistory:
    states: Tuple[State, ...]
    steps: Tuple[Step, ...] = ()

    def __len__(self):
        return len(self.steps)

    def transitions(self) -> Iterator[Tuple[int, State, Step, State]]:
        for i, step in enumerate(self.steps):
            yield i, self.states[i], step, self.states[i + 1]

    @property
    def actions(self) -> ActionSequence:
        return tuple(self.steps)

    def n_actions(self) -> int:
        return sum(len(s) for s in self.steps)

    def step_lines(self) -> List[str]:
        return [
            f"step {i}: {{{', '.join(str(a) for a in sorted(step))}}}"
            for i, step in enumerate(self.steps)
        ]

    def to_dict(self) -> dict:
        return {
            "length": len(self.steps),
            "steps": [[str(a) for a in sorted(step)] for step in self.steps],
        }


def is_conflicting(first: ActionInstance, second: ActionInstance,
                   schemas: Mapping[str, ActionSchema],
                   effects: Optional[Mapping[ActionInstance, Effect]] = None) -> bool:
    if schemas[first.name].conflicts(first, second) or schemas[second.name].conflicts(second, first):
        return True
    if effects is not None and effects[first].clashes_with(effects[second]):
        return True
    return False


def joint_clash(state: State, actions: Iterable[ActionInstance],
                schemas: Mapping[str, ActionSchema]) -> Optional[Tuple[ActionInstance, ActionInstance]]:
    """The last two instances of the first schema whose group `joint` rejects."""
    groups: Dict[str, List[ActionInstance]] = {}
    for action in sorted(actions):
        groups.setdefault(action.name, []).append(action)
    for name, group in groups.items():
        if len(group) > 1 and not schemas[name].joint(state, group):
            return group[-2], group[-1]
    return None


def _as_schema_map(schemas) -> Mapping[str, ActionSchema]:
    if isinstance(schemas, Mapping):
        return schemas
    if isinstance(schemas, PlanningProblem):
        return schemas.schema_map
    return {s.name: s for s in schemas}


def apply(state: State, actions: Iterable[ActionInstance], schemas) -> State:
    """Joint successor: union of adds over the state minus union of deletes."""
    schema_map = _as_schema_map(schemas)
    actions = sorted(set(actions))
    effects: Dict[ActionInstance, Effect] = {}
    for action in actions:
        schema = schema_map[action.name]
        if not schema.precondition(state, action.args):
            raise PreconditionViolated(action)
        effects[action] = schema.effect(state, action.args)

    for i, first in enumerate(actions):
        for second in actions[i + 1:]:
            if is_conflicting(first, second, schema_map, effects):
                raise ConflictingPair(first, second)
    clash = joint_clash(state, actions, schema_map)
    if clash is not None:
        raise ConflictingPair(*clash)

    adds = frozenset().union(*(e.adds for e in effects.values()))
    deletes = frozenset().union(*(e.deletes for e in effects.values()))
    return State((state.fluents - deletes) | adds)


def validate_history(problem: PlanningProblem, history: PlanHistory,
                     diagnostics: Optional[List[str]] = None) -> bool:
    """Check every history invariant and every learned constraint.

    Reasons for rejection are appended to `diagnostics` when given.
    """
    notes = diagnostics if diagnostics is not None else []

    if len(history.states) != len(history.steps) + 1:
        notes.append(f"{len(history.states)} states for {len(history.steps)} steps")
        return False
    if history.states[0] != problem.initial:
        notes.append("history does not start in the initial state")
        return False

    for i, before, step, after in history.transitions():
        try:
            successor = apply(before, step, problem.schema_map)
        except (PreconditionViolated, ConflictingPair) as e:
            notes.append(f"step {i}: {e}")
            return False
        except KeyError as e:
            notes.append(f"step {i}: unknown action schema {e}")
            return False
        if successor != after:
            notes.append(f"step {i}: successor state does not match the recorded state")
            return False
        broken = problem.violated_constraints(before, step)
        if broken:
            notes.append(f"step {i}: violates {broken[0]}")
            return False

    if history.actions in problem.plan_nogoods:
        notes.append("history is an excluded plan")
        return False
    if not problem.goal(history.states[-1]):
        notes.append("final state does not satisfy the goal")
        return False
    return True


def add_constraints(problem: PlanningProblem, constraints: Iterable[Constraint]) -> PlanningProblem:
    """Append constraints not already present, keeping their order."""
    known = set(problem.constraints)
    fresh = []
    for c in constraints:
        if c not in known:
            known.add(c)
            fresh.append(c)
    if not fresh:
        return problem
    return replace(problem, constraints=problem.constraints + tuple(fresh))


def exclude_plans(problem: PlanningProblem, sequences: Iterable[ActionSequence]) -> PlanningProblem:
    fresh = frozenset(sequences) - problem.plan_nogoods
    if not fresh:
        return problem
    return replace(problem, plan_nogoods=problem.plan_nogoods | fresh)


def parse_action(text: str) -> ActionInstance:
    """Inverse of str(ActionInstance): `name(1,2,3)`."""
    text = text.strip()
    if not text.endswith(")") or "(" not in text:
        raise ValueError(f"Malformed action {text!r}")
    name, _, rest = text[:-1].partition("(")
    try:
        args = tuple(int(v) for v in rest.split(",")) if rest.strip() else ()
    except ValueError:
        raise ValueError(f"Non-integer argument in action {text!r}")
    return ActionInstance(name.strip(), args)


def replay(problem: PlanningProblem, steps: Iterable[Iterable[ActionInstance]]) -> PlanHistory:
    """Rebuild the history of an action sequence from the initial state.

    Raises PreconditionViolated or ConflictingPair on an inapplicable step.
    """
    states = [problem.initial]
    frozen_steps = []
    for step in steps:
        step = frozenset(step)
        states.append(apply(states[-1], step, problem.schema_map))
        frozen_steps.append(step)
    return PlanHistory(tuple(states), tuple(frozen_steps))
