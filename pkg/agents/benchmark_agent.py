# Benchmark Agent: instances x strategies x modes, resumable by report row
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from agents.ingestion_agent import IngestionAgent
from agents.profiling_agent import RunReport, write_reports
from agents.strategy_agent import HybridPlanningAgent, parse_strategy
from checks.cache import CheckCache
from domains.registry import build_modules, build_problem, default_horizon, domain_for_extension, domain_of
from planning.planner import EnumerationConfig

logger = logging.getLogger(__name__)

DEFAULT_STRATEGIES = ("int", "filt", "repl", "pre+int", "pre+repl")


def solve_instance(instance, strategy: str, config: EnumerationConfig, assign: Optional[str] = None,
                   table: Optional[dict] = None, dedicated: bool = False, workers: int = 1,
                   use_cache: bool = True):
    """Build, configure and run one strategy on one instance."""
    spec = domain_of(instance)
    problem = build_problem(instance, horizon_max=config.horizon_max)
    modules = build_modules(instance)
    assignment = parse_strategy(strategy, modules, assign)
    cache = CheckCache(enabled=use_cache)
    if table:
        cache.preload(table)
    agent = HybridPlanningAgent(problem, modules, assignment, cache, config,
                                dedicated=dedicated, workers=workers,
                                domain=spec.name, instance=instance.name)
    return agent.run()


class BenchmarkAgent:
    def __init__(self, instance_paths: Sequence, strategies: Sequence[str], modes: Sequence[str],
                 config: EnumerationConfig, report_path, cache=None, dedicated: bool = False,
                 horizon_override: bool = False):
        self.ingestion = IngestionAgent()
        self.instance_paths = [Path(p) for p in instance_paths]
        self.strategies = list(strategies)
        self.modes = list(modes)
        self.config = config
        self.report_path = Path(report_path)
        self.cache = cache
        self.dedicated = dedicated
        self.horizon_override = horizon_override

    def plan_rows(self) -> List[Tuple[Path, str, str]]:
        return [(path, strategy, mode)
                for path in self.instance_paths
                for strategy in self.strategies
                for mode in self.modes]

    def completed(self) -> set:
        existing = self.ingestion.load_report(self.report_path)
        if existing.empty:
            return set()
        return set(zip(existing["instance"].astype(str), existing["strategy"].astype(str),
                       existing["mode"].astype(str)))

    def _run_one(self, path: Path, strategy: str, mode: str) -> RunReport:
        try:
            domain = domain_for_extension(path.suffix).name
        except ValueError:
            domain = "unknown"
        try:
            instance = self.ingestion.load_instance(path)
            horizon = self.config.horizon_max if self.horizon_override else default_horizon(instance)
            config = self.config.model_copy(update={"mode": mode, "horizon_max": horizon})
            table = self.ingestion.load_check_table(self.ingestion.table_path(self.cache, path))
            result = solve_instance(instance, strategy, config, table=table, dedicated=self.dedicated)
            report = result.report
            report.strategy = strategy
            return report
        except Exception as e:
            logger.error("%s [%s/%s] failed: %s", path.stem, strategy, mode, e)
            return RunReport(instance=path.stem, domain=domain, strategy=strategy,
                             mode=mode, status="Error", timeout_s=self.config.timeout, error=str(e))

    def run(self) -> pd.DataFrame:
        done = self.completed()
        rows = self.plan_rows()
        skipped = 0
        for path, strategy, mode in rows:
            if (path.stem, strategy, mode) in done:
                skipped += 1
                continue
            print(f"▶ {path.stem} [{strategy}/{mode}]")
            report = self._run_one(path, strategy, mode)
            write_reports([report], self.report_path, append=True)
            done.add((path.stem, strategy, mode))
        if skipped:
            logger.info("Skipped %d of %d runs already in %s", skipped, len(rows), self.report_path)
        return self.ingestion.load_report(self.report_path)
