"""
Bounded-horizon forward-search plan enumerator.

Iterative deepening over horizons 0..horizon_max. At every node the
conflict-free nonempty action sets are produced in lexicographic order of
their sorted members, so the plan stream is fully deterministic. The goal is
tested at the final state of a horizon only.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from planning.model import (
    ActionInstance,
    Effect,
    PlanHistory,
    PlanningProblem,
    State,
    Step,
    is_conflicting,
)

logger = logging.getLogger(__name__)


class EnumerationStatus(str, Enum):
    EXHAUSTED = "Exhausted"
    MAX_PLANS = "MaxPlans"
    TIMEOUT = "Timeout"
    NO_PLAN = "NoPlanExists"


class EnumerationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    horizon_max: int = Field(12, ge=0)
    max_plans: int = Field(10000, ge=1)
    timeout: float = Field(7200.0, gt=0)
    mode: Literal["first", "all"] = "first"
    minimal_only: bool = True
    memoize: bool = True

    @property
    def plan_cap(self) -> int:
        return 1 if self.mode == "first" else self.max_plans


@dataclass(frozen=True)
class HookVerdict:
    failed_keys: FrozenSet = frozenset()

    @property
    def feasible(self) -> bool:
        return not self.failed_keys


FEASIBLE = HookVerdict()

CheckHook = Callable[[State, Step, State], HookVerdict]
PlanFilter = Callable[[PlanHistory], bool]


@dataclass
class EnumerationStats:
    nodes: int = 0
    candidates: int = 0
    plans: int = 0
    hook_calls: int = 0
    hook_rejections: int = 0
    constraint_prunes: int = 0
    bound_prunes: int = 0
    memo_prunes: int = 0
    horizon: int = -1
    seconds: float = 0.0


class _Stop(Exception):
    def __init__(self, status: EnumerationStatus):
        self.status = status


class DeadEndMemo:
    """(state, depth, remaining) signatures already shown to lead to no plan."""

    def __init__(self):
        self._seen = set()

    def __contains__(self, signature) -> bool:
        return signature in self._seen

    def add(self, signature) -> None:
        self._seen.add(signature)

    def __len__(self):
        return len(self._seen)


_TIME_CHECK_EVERY = 256
_EXPANSION_CACHE_LIMIT = 200_000


class PlanEnumerator:
    """Iterate to receive plan histories; `status` and `stats` are final once
    iteration ends."""

    def __init__(self, problem: PlanningProblem, config: EnumerationConfig,
                 hook: Optional[CheckHook] = None,
                 plan_filter: Optional[PlanFilter] = None,
                 deadline: Optional[float] = None,
                 plan_cap: Optional[int] = None,
                 candidate_cap: Optional[int] = -1,
                 horizon_max: Optional[int] = None):
        self.problem = problem
        self.config = config
        self.hook = hook
        self.plan_filter = plan_filter
        self.deadline = deadline if deadline is not None else time.monotonic() + config.timeout
        self.plan_cap = plan_cap if plan_cap is not None else config.plan_cap
        # -1 selects the configured cap, None disables it
        self.candidate_cap = config.max_plans if candidate_cap == -1 else candidate_cap
        self.horizon_max = config.horizon_max if horizon_max is None else min(horizon_max, config.horizon_max)

        self.status: Optional[EnumerationStatus] = None
        self.stats = EnumerationStats()
        self.plans_horizon: Optional[int] = None

        use_memo = (config.memoize and config.mode == "first"
                    and plan_filter is None and not problem.plan_nogoods)
        self._memo = DeadEndMemo() if use_memo else None
        self._expansions: Dict[State, List[Tuple[Step, State]]] = {}
        self._capped = False

    def __iter__(self) -> Iterator[PlanHistory]:
        start = time.perf_counter()
        try:
            for h in range(self.horizon_max + 1):
                self.stats.horizon = h
                before = self.stats.plans
                yield from self._dfs(self.problem.initial, 0, h, [self.problem.initial], [])
                logger.debug("%s: horizon %d done, %d nodes, %d candidates, %d plans",
                             self.problem.name, h, self.stats.nodes,
                             self.stats.candidates, self.stats.plans)
                if self.stats.plans > before and self.plans_horizon is None:
                    self.plans_horizon = h
                if self.config.minimal_only and self.stats.plans > 0:
                    break
            self.status = EnumerationStatus.EXHAUSTED if self.stats.plans else EnumerationStatus.NO_PLAN
        except _Stop as stop:
            self.status = stop.status
        finally:
            # status stays None when the consumer abandons the stream
            self.stats.seconds += time.perf_counter() - start

    def run(self) -> List[PlanHistory]:
        return list(self)

    def _check_stop(self) -> None:
        if self._capped:
            raise _Stop(EnumerationStatus.MAX_PLANS)
        self.stats.nodes += 1
        if self.stats.nodes % _TIME_CHECK_EVERY == 0 and time.monotonic() >= self.deadline:
            raise _Stop(EnumerationStatus.TIMEOUT)

    def _dfs(self, state: State, depth: int, h: int,
             states: List[State], steps: List[Step]) -> Iterator[PlanHistory]:
        self._check_stop()
        remaining = h - depth

        if remaining == 0:
            if self.problem.goal(state):
                history = PlanHistory(tuple(states), tuple(steps))
                if self._accept(history):
                    yield history
            return

        signature = (state, depth, remaining)
        if self._memo is not None and signature in self._memo:
            self.stats.memo_prunes += 1
            return

        plans_before = self.stats.plans
        for step, successor in self._expand(state):
            self._check_stop()
            if self.problem.bound(successor) > remaining - 1:
                self.stats.bound_prunes += 1
                continue
            if self.hook is not None:
                self.stats.hook_calls += 1
                if not self.hook(state, step, successor).feasible:
                    self.stats.hook_rejections += 1
                    continue
            states.append(successor)
            steps.append(step)
            try:
                yield from self._dfs(successor, depth + 1, h, states, steps)
            finally:
                states.pop()
                steps.pop()

        if self._memo is not None and self.stats.plans == plans_before:
            self._memo.add(signature)

    def _accept(self, history: PlanHistory) -> bool:
        if history.actions in self.problem.plan_nogoods:
            return False
        self.stats.candidates += 1
        if self.candidate_cap is not None and self.stats.candidates >= self.candidate_cap:
            self._capped = True
        if self.plan_filter is not None and not self.plan_filter(history):
            return False
        self.stats.plans += 1
        if self.stats.plans >= self.plan_cap:
            self._capped = True
        return True

    def _expand(self, state: State) -> List[Tuple[Step, State]]:
        cached = self._expansions.get(state)
        if cached is not None:
            return cached

        schemas = self.problem.schema_map
        applicable: List[ActionInstance] = []
        for name in sorted(schemas):
            applicable.extend(schemas[name].instantiate(state))
        applicable.sort()
        effects: Dict[ActionInstance, Effect] = {
            a: schemas[a.name].effect(state, a.args) for a in applicable
        }

        expansions: List[Tuple[Step, State]] = []
        chosen: List[ActionInstance] = []

        def extend(start: int) -> None:
            for i in range(start, len(applicable)):
                action = applicable[i]
                if any(is_conflicting(other, action, schemas, effects) for other in chosen):
                    continue
                group = [a for a in chosen if a.name == action.name]
                if group and not schemas[action.name].joint(state, group + [action]):
                    continue
                chosen.append(action)
                step = frozenset(chosen)
                if self.problem.violates(state, step):
                    # every superset violates the same constraint
                    self.stats.constraint_prunes += 1
                else:
                    expansions.append((step, _successor(state, chosen, effects)))
                    extend(i + 1)
                chosen.pop()

        extend(0)
        if len(self._expansions) >= _EXPANSION_CACHE_LIMIT:
            self._expansions.clear()
        self._expansions[state] = expansions
        return expansions


def _successor(state: State, actions: List[ActionInstance], effects: Dict[ActionInstance, Effect]) -> State:
    adds = frozenset().union(*(effects[a].adds for a in actions))
    deletes = frozenset().union(*(effects[a].deletes for a in actions))
    return State((state.fluents - deletes) | adds)


def enumerate_plans(problem: PlanningProblem, config: EnumerationConfig,
                    hook: Optional[CheckHook] = None, **kwargs) -> PlanEnumerator:
    return PlanEnumerator(problem, config, hook=hook, **kwargs)
