"""
Post-generation checking of complete plan candidates (Filt and Repl).

Transitions are checked in order. At the first transition with a failing
key, repl-assigned modules contribute every failing key of that transition
as learned constraints, filt-assigned modules only reject. Learned
constraints and the exclusions of already emitted plans are held back until
`batch_k` candidates have been refuted by repl modules with a key that never
failed before; the agent then asks the driver to restart the search on the
updated problem. A candidate that only fails known keys is rejected without
counting towards the batch, so every restart brings a new failing key.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from checks.cache import CheckCache
from checks.modules import CheckKey, CheckModule
from planning.model import ActionSequence, Constraint, PlanHistory, PlanningProblem, add_constraints, exclude_plans

logger = logging.getLogger(__name__)


class RestartSearch(Exception):
    """Raised from inside the plan stream once a batch of refutations is complete."""


@dataclass
class Refutation:
    step: int
    failures: List[Tuple[CheckModule, CheckKey]]
    learned: bool


@dataclass
class PostCheckStats:
    candidates: int = 0
    feasible: int = 0
    infeasible: int = 0
    restarts: int = 0
    rejections: Dict[str, int] = field(default_factory=dict)


class PostCheckAgent:
    def __init__(self, filt_modules: Sequence[CheckModule], repl_modules: Sequence[CheckModule],
                 cache: CheckCache, batch_k: int = 1):
        if batch_k < 1:
            raise ValueError(f"batch_k must be at least 1, got {batch_k}")
        self.filt_modules = list(filt_modules)
        self.repl_modules = list(repl_modules)
        self.cache = cache
        self.batch_k = batch_k
        self.stats = PostCheckStats(rejections={m.module_id: 0 for m in self.modules})

        self.pending_constraints: List[Constraint] = []
        self.pending_plans: List[ActionSequence] = []
        self.failing_keys: Set[CheckKey] = set()
        self._batch = 0

    @property
    def modules(self) -> List[CheckModule]:
        return self.repl_modules + self.filt_modules

    @property
    def learning(self) -> bool:
        return bool(self.repl_modules)

    def refute(self, history: PlanHistory) -> Optional[Refutation]:
        for i, before, step, after in history.transitions():
            failures = []
            for module in self.repl_modules:
                for key in sorted(module.extract_keys(before, step, after)):
                    if not self.cache.feasible(module, key):
                        failures.append((module, key))
            if failures:
                return Refutation(i, failures, learned=True)
            for module in self.filt_modules:
                for key in sorted(module.extract_keys(before, step, after)):
                    if not self.cache.feasible(module, key):
                        return Refutation(i, [(module, key)], learned=False)
        return None

    def _learn(self, history: PlanHistory, refutation: Refutation) -> bool:
        """Queue the refutation's constraints; True when a key fails for the first time."""
        before = history.states[refutation.step]
        step = history.steps[refutation.step]
        after = history.states[refutation.step + 1]
        fresh = False
        for module, key in refutation.failures:
            if key not in self.failing_keys:
                self.failing_keys.add(key)
                fresh = True
            self.pending_constraints.append(module.blame(key, before, step, after))
            self.pending_constraints.extend(module.key_constraints(key))
        return fresh

    def accept(self, history: PlanHistory) -> bool:
        """Plan filter for the enumerator."""
        self.stats.candidates += 1
        refutation = self.refute(history)
        if refutation is None:
            self.stats.feasible += 1
            if self.learning:
                self.pending_plans.append(history.actions)
            return True

        self.stats.infeasible += 1
        first_module = refutation.failures[0][0].module_id
        self.stats.rejections[first_module] += 1
        logger.debug("Candidate %d fails at step %d: %s", self.stats.candidates, refutation.step,
                     ", ".join(str(k) for _, k in refutation.failures))
        # known keys failing in a new context are rejected in place
        if refutation.learned and self._learn(history, refutation):
            self._batch += 1
            if self._batch >= self.batch_k:
                raise RestartSearch()
        return False

    def apply_pending(self, problem: PlanningProblem) -> PlanningProblem:
        """The problem extended by the batch's constraints and plan exclusions."""
        updated = add_constraints(problem, self.pending_constraints)
        updated = exclude_plans(updated, self.pending_plans)
        self.pending_constraints = []
        self.pending_plans = []
        self._batch = 0
        return updated
