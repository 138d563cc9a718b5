import time

import pytest
from pydantic import ValidationError

from conftest import line_problem, steps
from planning.model import ActionInstance, Constraint, Fluent, add_constraints, exclude_plans, validate_history
from planning.planner import (
    FEASIBLE,
    EnumerationConfig,
    EnumerationStatus,
    HookVerdict,
    PlanEnumerator,
    enumerate_plans,
)

ALL = EnumerationConfig(horizon_max=4, mode="all")
FIRST = EnumerationConfig(horizon_max=4, mode="first")

TWO_JUMPS = [
    steps(["jump(2)"], ["jump(4)"]),
    steps(["jump(2)"], ["jump(4)", "toggle()"]),
    steps(["jump(2)", "toggle()"], ["jump(4)"]),
    steps(["jump(2)", "toggle()"], ["jump(4)", "toggle()"]),
]


def _sequences(enumerator):
    return [p.actions for p in enumerator]


def test_all_minimal_plans_in_lexicographic_order(line):
    enumerator = PlanEnumerator(line, ALL)
    assert _sequences(enumerator) == TWO_JUMPS
    assert enumerator.status == EnumerationStatus.EXHAUSTED
    assert enumerator.plans_horizon == 2


def test_first_mode_stops_at_one_plan(line):
    enumerator = PlanEnumerator(line, FIRST)
    assert _sequences(enumerator) == TWO_JUMPS[:1]
    assert enumerator.status == EnumerationStatus.MAX_PLANS


def test_plan_cap(line):
    enumerator = PlanEnumerator(line, EnumerationConfig(horizon_max=4, mode="all", max_plans=2))
    assert _sequences(enumerator) == TWO_JUMPS[:2]
    assert enumerator.status == EnumerationStatus.MAX_PLANS


def test_horizon_too_short(line):
    enumerator = PlanEnumerator(line, EnumerationConfig(horizon_max=1, mode="all"))
    assert _sequences(enumerator) == []
    assert enumerator.status == EnumerationStatus.NO_PLAN


def test_goal_at_initial_state_is_the_empty_plan():
    problem = line_problem(length=0)
    enumerator = PlanEnumerator(problem, FIRST)
    plans = list(enumerator)
    assert [len(p) for p in plans] == [0]
    assert enumerator.status == EnumerationStatus.EXHAUSTED


def test_every_plan_is_a_valid_history():
    problem = line_problem(length=5, horizon=5)
    plans = list(PlanEnumerator(problem, EnumerationConfig(horizon_max=5, mode="all")))
    assert plans
    assert all(len(p) == 3 for p in plans)
    assert all(validate_history(problem, p) for p in plans)
    assert len({p.actions for p in plans}) == len(plans)


def test_constraints_prune_steps(line):
    blocked = add_constraints(line, [Constraint.of([Fluent("at", (0,))], [ActionInstance("jump", (2,))])])
    plans = list(PlanEnumerator(blocked, ALL))
    assert plans
    assert all(ActionInstance("jump", (2,)) not in p.steps[0] for p in plans)
    assert {len(p) for p in plans} == {3}


def test_nogoods_exclude_exact_sequences(line):
    problem = exclude_plans(line, TWO_JUMPS[:1])
    assert _sequences(PlanEnumerator(problem, ALL)) == TWO_JUMPS[1:]


def test_hook_rejects_transitions(line):
    def no_lamp(before, step, after):
        if any(a.name == "toggle" for a in step):
            return HookVerdict(frozenset(["lamp"]))
        return FEASIBLE

    enumerator = enumerate_plans(line, ALL, hook=no_lamp)
    assert _sequences(enumerator) == TWO_JUMPS[:1]
    assert enumerator.stats.hook_rejections > 0


def test_plan_filter_and_candidate_cap(line):
    enumerator = PlanEnumerator(line, EnumerationConfig(horizon_max=4, mode="all", max_plans=3),
                                plan_filter=lambda history: False)
    assert _sequences(enumerator) == []
    assert enumerator.stats.candidates == 3
    assert enumerator.status == EnumerationStatus.MAX_PLANS


def test_bound_and_memo_do_not_change_the_plan_set():
    plain = line_problem(length=5, horizon=5)
    bounded = line_problem(length=5, horizon=5, bounded=True)
    config = EnumerationConfig(horizon_max=5, mode="all")
    assert _sequences(PlanEnumerator(plain, config)) == _sequences(PlanEnumerator(bounded, config))
    first_memo = PlanEnumerator(plain, EnumerationConfig(horizon_max=5, memoize=True))
    first_plain = PlanEnumerator(plain, EnumerationConfig(horizon_max=5, memoize=False))
    assert _sequences(first_memo) == _sequences(first_plain)


def test_non_minimal_enumeration_continues_past_the_first_horizon():
    problem = line_problem(length=2, horizon=2)
    config = EnumerationConfig(horizon_max=2, mode="all", minimal_only=False)
    lengths = [len(p) for p in PlanEnumerator(problem, config)]
    assert lengths[0] == 1
    assert 2 in lengths


def test_deadline_stops_the_search():
    problem = line_problem(length=40, horizon=30)
    enumerator = PlanEnumerator(problem, EnumerationConfig(horizon_max=30, mode="all"),
                                deadline=time.monotonic() - 1.0)
    assert list(enumerator) == []
    assert enumerator.status == EnumerationStatus.TIMEOUT


def test_config_validation():
    with pytest.raises(ValidationError):
        EnumerationConfig(max_plans=0)
    with pytest.raises(ValidationError):
        EnumerationConfig(mode="some")
    assert EnumerationConfig().plan_cap == 1
    assert EnumerationConfig(mode="all").plan_cap == 10000
