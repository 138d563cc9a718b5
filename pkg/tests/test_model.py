import pytest

from conftest import line_problem, steps
from planning.model import (
    ActionInstance,
    ActionSchema,
    ConflictingPair,
    Constraint,
    Effect,
    Fluent,
    PlanHistory,
    PlanningProblem,
    PreconditionViolated,
    State,
    add_constraints,
    apply,
    exclude_plans,
    joint_clash,
    parse_action,
    replay,
    validate_history,
)
from planning.planner import EnumerationConfig, PlanEnumerator


def test_effect_keeps_readded_fluents():
    f = Fluent("lamp")
    effect = Effect.of(adds=[f], deletes=[f, Fluent("at", (0,))])
    assert effect.deletes == frozenset([Fluent("at", (0,))])


def test_apply_joint_step(line):
    state = apply(line.initial, [ActionInstance("jump", (2,)), ActionInstance("toggle")], line)
    assert state == State.of([Fluent("at", (2,)), Fluent("lamp")])


def test_apply_empty_step_is_identity(line):
    assert apply(line.initial, [], line) == line.initial


def test_apply_rejects_conflicts_and_preconditions(line):
    with pytest.raises(ConflictingPair):
        apply(line.initial, [ActionInstance("jump", (2,)), ActionInstance("right", (1,))], line)
    with pytest.raises(PreconditionViolated) as err:
        apply(line.initial, [ActionInstance("right", (3,))], line)
    assert err.value.action == ActionInstance("right", (3,))


def _marking_problem():
    schema = ActionSchema(
        "mark", lambda state: [(1,), (2,), (3,)], lambda state, args: True,
        lambda state, args: Effect.of(adds=[Fluent("mark", tuple(args))]),
        joint=lambda state, group: len(group) <= 2,
    )
    return PlanningProblem(initial=State.of([]), goal=lambda state: True, schemas=(schema,), horizon_max=1)


def test_joint_rule_caps_groups():
    problem = _marking_problem()
    marks = [ActionInstance("mark", (i,)) for i in (1, 2, 3)]
    assert len(apply(problem.initial, marks[:2], problem).fluents) == 2
    assert joint_clash(problem.initial, marks[:2], problem.schema_map) is None
    assert joint_clash(problem.initial, marks, problem.schema_map) == (marks[1], marks[2])
    with pytest.raises(ConflictingPair) as err:
        apply(problem.initial, reversed(marks), problem)
    assert err.value.pair == (marks[1], marks[2])

    config = EnumerationConfig(horizon_max=1, mode="all", minimal_only=False)
    one_step = [p for p in PlanEnumerator(problem, config) if len(p) == 1]
    assert len(one_step) == 6
    assert all(len(p.steps[0]) <= 2 for p in one_step)


def test_action_text_round_trip():
    for text in ("move_cm(3,4)", "toggle()", "place(1,0,2)"):
        assert str(parse_action(text)) == text
    with pytest.raises(ValueError):
        parse_action("move_cm 3 4")
    with pytest.raises(ValueError):
        parse_action("move_cm(a,4)")


def test_replay_and_validate(line):
    history = replay(line, steps(["jump(2)"], ["jump(4)", "toggle()"]))
    assert len(history) == 2
    assert history.n_actions() == 3
    assert validate_history(line, history)
    assert history.step_lines() == ["step 0: {jump(2)}", "step 1: {jump(4), toggle()}"]
    assert history.to_dict() == {"length": 2, "steps": [["jump(2)"], ["jump(4)", "toggle()"]]}


def test_validate_reports_reasons(line):
    notes = []
    short = replay(line, steps(["jump(2)"]))
    assert not validate_history(line, short, notes)
    assert notes == ["final state does not satisfy the goal"]

    forged = PlanHistory(
        (line.initial, State.of([Fluent("at", (4,))])),
        (frozenset([ActionInstance("jump", (2,))]),),
    )
    notes = []
    assert not validate_history(line, forged, notes)
    assert "does not match" in notes[0]


def test_constraints_and_nogoods_invalidate_histories(line):
    history = replay(line, steps(["jump(2)"], ["jump(4)"]))
    blocked = add_constraints(line, [Constraint.of([Fluent("at", (2,))], [ActionInstance("jump", (4,))])])
    notes = []
    assert not validate_history(blocked, history, notes)
    assert "violates" in notes[0]

    excluded = exclude_plans(line, [history.actions])
    assert not validate_history(excluded, history)
    assert exclude_plans(excluded, [history.actions]) is excluded


def test_add_constraints_deduplicates_in_order(line):
    c1 = Constraint.of([], [ActionInstance("jump", (2,))])
    c2 = Constraint.of([Fluent("at", (0,))], [ActionInstance("right", (1,))])
    once = add_constraints(line, [c1, c2, c1])
    assert once.constraints == (c1, c2)
    assert add_constraints(once, [c2]) is once


def test_joint_constraint_needs_every_forbidden_action(line):
    joint = Constraint.of([], [ActionInstance("jump", (2,)), ActionInstance("toggle")])
    problem = add_constraints(line, [joint])
    assert problem.violates(line.initial, frozenset([ActionInstance("jump", (2,)), ActionInstance("toggle")]))
    assert not problem.violates(line.initial, frozenset([ActionInstance("jump", (2,))]))


def test_problem_bound_defaults_to_zero():
    assert line_problem().bound(line_problem().initial) == 0
    assert line_problem(bounded=True).bound(line_problem().initial) == 2
