"""
Integration strategies and their combination.

A StrategyAssignment gives every check module one role. The pipeline runs
pre-assigned modules first and folds their failures into the problem. Then it
hands int-assigned modules to the planner as its transition hook and
post-checks complete candidates with the filt- and repl-assigned modules,
restarting on the constrained problem whenever repl modules learn.
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from agents.interleave_agent import ModuleHook
from agents.postcheck_agent import PostCheckAgent, RestartSearch
from agents.precompute_agent import PrecomputeTimeout, run_pre
from agents.profiling_agent import RunOutcome, RunProfiler, RunReport, instrument
from checks.cache import CheckCache
from checks.modules import CheckModule, PrecomputationUnsupported
from planning.model import PlanHistory, PlanningProblem
from planning.planner import EnumerationConfig, EnumerationStatus, PlanEnumerator

logger = logging.getLogger(__name__)

Role = Literal["pre", "int", "filt", "repl", "off"]
ROLES = ("pre", "int", "filt", "repl", "off")


class InvalidAssignment(ValueError):
    pass


class StrategyAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    roles: Dict[str, Role]
    batch_k: int = Field(1, ge=1)
    label: str = ""

    def modules_with(self, role: str, modules: Sequence[CheckModule]) -> List[CheckModule]:
        return [m for m in modules if self.roles.get(m.module_id) == role]

    def validate_for(self, modules: Sequence[CheckModule]) -> "StrategyAssignment":
        ids = {m.module_id for m in modules}
        unknown = set(self.roles) - ids
        if unknown:
            raise InvalidAssignment(f"Unknown check modules: {sorted(unknown)}. Available: {sorted(ids)}")
        missing = ids - set(self.roles)
        if missing:
            raise InvalidAssignment(f"Modules without a role: {sorted(missing)}")
        for module in modules:
            if self.roles[module.module_id] == "pre" and not module.precomputable:
                raise PrecomputationUnsupported(module.module_id)
        return self

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return "mixed(" + ",".join(f"{m}={r}" for m, r in sorted(self.roles.items())) + ")"


def _parse_role(text: str) -> Tuple[str, int]:
    text = text.strip().lower()
    if text.startswith("batchrepl:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise InvalidAssignment(f"batchrepl needs an integer batch size, got {text!r}")
        if k < 1:
            raise InvalidAssignment(f"batch size must be at least 1, got {k}")
        return "repl", k
    if text not in ROLES:
        raise InvalidAssignment(f"Unknown strategy {text!r}. Supported: {list(ROLES)} and batchrepl:K")
    return text, 1


def parse_strategy(strategy: str, modules: Sequence[CheckModule],
                   assign: Optional[str] = None) -> StrategyAssignment:
    """Turn `pre`, `int`, `filt`, `repl`, `batchrepl:K`, `pre+X` plus optional
    `MODULE=ROLE,...` overrides into a validated assignment."""
    strategy = (strategy or "off").strip().lower()
    roles: Dict[str, str] = {}
    batch_k = 1

    if strategy.startswith("pre+"):
        rest, batch_k = _parse_role(strategy[4:])
        if rest == "pre":
            raise InvalidAssignment(f"Malformed strategy {strategy!r}")
        for m in modules:
            roles[m.module_id] = "pre" if m.precomputable else rest
    else:
        role, batch_k = _parse_role(strategy)
        for m in modules:
            roles[m.module_id] = role

    label = strategy
    if assign:
        for item in assign.split(","):
            if not item.strip():
                continue
            if "=" not in item:
                raise InvalidAssignment(f"Expected MODULE=ROLE, got {item.strip()!r}")
            module_id, role_text = (p.strip() for p in item.split("=", 1))
            role, k = _parse_role(role_text)
            if k > 1:
                batch_k = k
            roles[module_id] = role
        label = ""

    assignment = StrategyAssignment(roles=roles, batch_k=batch_k, label=label)
    return assignment.validate_for(modules)


def uniform(role: str, modules: Sequence[CheckModule], batch_k: int = 1) -> StrategyAssignment:
    label = f"batchrepl:{batch_k}" if role == "repl" and batch_k > 1 else role
    return StrategyAssignment(roles={m.module_id: role for m in modules}, batch_k=batch_k,
                              label=label).validate_for(modules)


@dataclass
class StrategyResult:
    plans: List[PlanHistory]
    report: RunReport
    problem: PlanningProblem

    @property
    def status(self) -> str:
        return self.report.status

    def action_sequences(self) -> set:
        return {p.actions for p in self.plans}


class HybridPlanningAgent:
    def __init__(self, problem: PlanningProblem, modules: Sequence[CheckModule],
                 assignment: StrategyAssignment, cache: Optional[CheckCache] = None,
                 config: Optional[EnumerationConfig] = None, dedicated: bool = False,
                 workers: int = 1, domain: str = "", instance: str = ""):
        self.problem = problem
        self.modules = list(modules)
        self.assignment = assignment.validate_for(self.modules)
        self.cache = cache if cache is not None else CheckCache()
        self.config = config or EnumerationConfig(horizon_max=problem.horizon_max)
        self.dedicated = dedicated
        self.workers = workers
        self.domain = domain
        self.instance = instance or problem.name

    def run(self) -> StrategyResult:
        outcome, report = instrument(
            self._execute, self.cache,
            instance=self.instance, domain=self.domain, strategy=self.assignment.name,
            mode=self.config.mode, timeout_s=self.config.timeout,
        )
        return StrategyResult(outcome.plans, report, outcome.problem)

    def _execute(self, profiler: RunProfiler) -> RunOutcome:
        deadline = time.monotonic() + self.config.timeout
        roles = self.assignment
        pre = roles.modules_with("pre", self.modules)
        hook_modules = roles.modules_with("int", self.modules)
        filt = roles.modules_with("filt", self.modules)
        repl = roles.modules_with("repl", self.modules)

        problem = self.problem
        precompute = None
        if pre:
            try:
                problem, precompute = run_pre(problem, pre, self.cache, dedicated=self.dedicated,
                                              workers=self.workers, deadline=deadline)
            except PrecomputeTimeout:
                logger.warning("%s: precomputation timed out", self.instance)
                return RunOutcome(plans=[], status=EnumerationStatus.TIMEOUT, problem=problem)
            profiler.sample_memory()

        hook = ModuleHook(hook_modules, self.cache) if hook_modules else None
        post = PostCheckAgent(filt, repl, self.cache, batch_k=roles.batch_k) if (filt or repl) else None

        if post is not None and post.learning:
            outcome = self._replan(problem, hook, post, deadline, profiler)
        else:
            enumerator = PlanEnumerator(problem, self.config, hook=hook,
                                        plan_filter=post.accept if post else None,
                                        deadline=deadline)
            plans = list(enumerator)
            outcome = RunOutcome(
                plans=plans,
                status=enumerator.status,
                n_infeasible=post.stats.infeasible if post else 0,
                n_candidates=enumerator.stats.candidates,
                problem=problem,
            )
        outcome.precompute = precompute
        if outcome.problem is not None:
            outcome.constraints = len(outcome.problem.constraints) - len(self.problem.constraints)
        return outcome

    def _replan(self, problem: PlanningProblem, hook: Optional[ModuleHook], post: PostCheckAgent,
                deadline: float, profiler: RunProfiler) -> RunOutcome:
        plans: List[PlanHistory] = []
        best_h: Optional[int] = None
        restarts = 0
        candidates = 0
        plan_cap = self.config.plan_cap
        # an unbounded batch still stops at the candidate cap
        post.batch_k = min(post.batch_k, self.config.max_plans)

        while True:
            horizon = best_h if (self.config.minimal_only and best_h is not None) else None
            enumerator = PlanEnumerator(problem, self.config, hook=hook, plan_filter=post.accept,
                                        deadline=deadline, plan_cap=plan_cap - len(plans),
                                        candidate_cap=None, horizon_max=horizon)
            try:
                for plan in enumerator:
                    plans.append(plan)
                    if best_h is None:
                        best_h = len(plan)
            except RestartSearch:
                candidates += enumerator.stats.candidates
                updated = post.apply_pending(problem)
                restarts += 1
                grown = (len(updated.constraints) - len(problem.constraints)
                         + len(updated.plan_nogoods) - len(problem.plan_nogoods))
                if grown <= 0:
                    raise RuntimeError("replanning restart learned nothing new")
                logger.info("%s: restart %d with %d constraints", self.instance, restarts,
                            len(updated.constraints))
                problem = updated
                profiler.sample_memory()
                if time.monotonic() >= deadline:
                    status = EnumerationStatus.TIMEOUT
                    break
                continue
            candidates += enumerator.stats.candidates
            status = enumerator.status
            if status == EnumerationStatus.NO_PLAN and plans:
                status = EnumerationStatus.EXHAUSTED
            break

        return RunOutcome(
            plans=plans,
            status=status,
            n_infeasible=post.stats.infeasible,
            n_candidates=candidates,
            restarts=restarts,
            failing_keys=len(post.failing_keys),
            problem=problem,
        )


def run_mixed(problem: PlanningProblem, assignment: StrategyAssignment, cache: CheckCache,
              config: EnumerationConfig, modules: Sequence[CheckModule], **options) -> StrategyResult:
    return HybridPlanningAgent(problem, modules, assignment, cache, config, **options).run()


def run_int(problem, modules, cache, config, **options) -> StrategyResult:
    return run_mixed(problem, uniform("int", modules), cache, config, modules, **options)


def run_filt(problem, modules, cache, config, **options) -> StrategyResult:
    return run_mixed(problem, uniform("filt", modules), cache, config, modules, **options)


def run_repl(problem, modules, cache, config, **options) -> StrategyResult:
    return run_mixed(problem, uniform("repl", modules), cache, config, modules, **options)


def run_batch_repl(problem, modules, cache, config, batch_k: int, **options) -> StrategyResult:
    if batch_k < 1:
        raise InvalidAssignment(f"batch size must be at least 1, got {batch_k}")
    return run_mixed(problem, uniform("repl", modules, batch_k), cache, config, modules, **options)


def run_pre_plan(problem, modules, cache, config, **options) -> StrategyResult:
    """Precompute, then enumerate the constrained problem without further checks."""
    return run_mixed(problem, uniform("pre", modules), cache, config, modules, **options)
