# Precomputation (Pre): evaluate a module's whole input space up front
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from checks.cache import CheckCache
from checks.modules import CheckKey, CheckModule, PrecomputationUnsupported, enumerate_input_space
from planning.model import Constraint, PlanningProblem, add_constraints

logger = logging.getLogger(__name__)

_CHUNK = 1024


class PrecomputeTimeout(RuntimeError):
    pass


@dataclass
class PrecomputeStats:
    checks: int = 0
    failed: int = 0
    loaded: int = 0
    constraints: int = 0
    seconds: float = 0.0
    modules: Dict[str, dict] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "checks": self.checks,
            "failed": self.failed,
            "loaded": self.loaded,
            "constraints": self.constraints,
            "seconds": round(self.seconds, 6),
            "modules": self.modules,
        }


class PrecomputeAgent:
    def __init__(self, modules: Sequence[CheckModule], cache: CheckCache,
                 dedicated: bool = False, workers: int = 1, deadline: Optional[float] = None):
        for module in modules:
            if not module.precomputable:
                raise PrecomputationUnsupported(module.module_id)
        self.modules = list(modules)
        self.cache = cache
        self.dedicated = dedicated
        self.workers = max(1, workers)
        self.deadline = deadline

    def _expired(self) -> bool:
        return self.deadline is not None and time.monotonic() >= self.deadline

    def _evaluate_keys(self, module: CheckModule, keys: Iterable[CheckKey]) -> Dict[CheckKey, bool]:
        verdicts: Dict[CheckKey, bool] = {}
        keys = iter(keys)
        pool = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            while True:
                chunk = list(islice(keys, _CHUNK))
                if not chunk:
                    break
                if self._expired():
                    raise PrecomputeTimeout(f"precomputation of {module.module_id} hit the deadline")
                if pool is None:
                    results = [self.cache.feasible(module, k) for k in chunk]
                else:
                    results = list(pool.map(lambda k: self.cache.feasible(module, k), chunk))
                verdicts.update(zip(chunk, results))
        finally:
            if pool is not None:
                pool.shutdown(wait=True)
        return verdicts

    def _evaluate_dedicated(self, module: CheckModule) -> Optional[Dict[CheckKey, bool]]:
        start = time.perf_counter()
        table = module.dedicated_table()
        if table is None:
            return None
        if len(table) != module.input_space_size():
            raise ValueError(f"{module.module_id}: dedicated table has {len(table)} keys, "
                             f"input space has {module.input_space_size()}")
        share = (time.perf_counter() - start) / max(1, len(table))
        for key in sorted(table):
            if key in self.cache:
                # preloaded verdicts win and count as hits
                self.cache.query(module, key)
            else:
                self.cache.record(module, key, table[key], share)
        return table

    def evaluate_all(self) -> Dict[str, Dict[CheckKey, bool]]:
        """Verdict for every key of every module, by module id."""
        results = {}
        for module in self.modules:
            verdicts = self._evaluate_dedicated(module) if self.dedicated else None
            if verdicts is None:
                verdicts = self._evaluate_keys(module, enumerate_input_space(module))
            results[module.module_id] = verdicts
        return results

    def constraints_for(self, module: CheckModule, verdicts: Dict[CheckKey, bool]) -> List[Constraint]:
        found = []
        for key in sorted(k for k, ok in verdicts.items() if not ok):
            found.extend(module.key_constraints(key))
        return found

    def run(self, problem: PlanningProblem) -> Tuple[PlanningProblem, PrecomputeStats]:
        stats = PrecomputeStats()
        start = time.perf_counter()
        before = self.cache.snapshot()

        all_verdicts = self.evaluate_all()
        learned: List[Constraint] = []
        for module in self.modules:
            verdicts = all_verdicts[module.module_id]
            constraints = self.constraints_for(module, verdicts)
            learned.extend(constraints)
            after = self.cache.snapshot().get(module.module_id)
            prior = before.get(module.module_id)
            distinct = after.distinct - (prior.distinct if prior else 0) if after else 0
            failed_keys = sum(1 for ok in verdicts.values() if not ok)
            stats.modules[module.module_id] = {
                "keys": len(verdicts),
                "evaluated": distinct,
                "failed": failed_keys,
                "constraints": len(constraints),
            }
            stats.checks += distinct
            stats.failed += failed_keys
            stats.loaded += len(verdicts) - distinct

        augmented = add_constraints(problem, learned)
        stats.constraints = len(augmented.constraints) - len(problem.constraints)
        stats.seconds = time.perf_counter() - start
        logger.info("Precomputed %d checks (%d failed) into %d constraints in %.3fs",
                    stats.checks, stats.failed, stats.constraints, stats.seconds)
        return augmented, stats


def run_pre(problem: PlanningProblem, modules: Sequence[CheckModule], cache: CheckCache,
            dedicated: bool = False, workers: int = 1,
            deadline: Optional[float] = None) -> Tuple[PlanningProblem, PrecomputeStats]:
    """Every failed key of every module becomes constraints on the returned problem."""
    agent = PrecomputeAgent(modules, cache, dedicated=dedicated, workers=workers, deadline=deadline)
    return agent.run(problem)
