# Run Profiling Agent
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import pandas as pd
import psutil
from pydantic import BaseModel

from checks.cache import CheckCache

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "instance", "domain", "strategy", "mode", "status", "wall_s", "lowlevel_s",
    "n_feas", "n_infeas", "checks_distinct", "checks_total", "restarts",
]
# bench rows carry the failure message of runs that raised
REPORT_COLUMNS = CSV_COLUMNS + ["error"]

SUMMARY_METRICS = ["wall_s", "lowlevel_s", "n_feas", "n_infeas", "checks_distinct", "checks_total", "restarts"]


class RunReport(BaseModel):
    instance: str
    domain: str
    strategy: str
    mode: str
    status: str
    timeout_s: float = 7200.0
    wall_time_total: float = 0.0
    time_lowlevel: float = 0.0
    time_highlevel: float = 0.0
    n_feasible: int = 0
    n_infeasible: int = 0
    n_candidates: int = 0
    n_checks_distinct: int = 0
    n_checks_total: int = 0
    n_restarts: int = 0
    n_constraints: int = 0
    n_failing_keys: int = 0
    plan_length: Optional[int] = None
    precompute_checks: int = 0
    precompute_s: float = 0.0
    peak_memory_estimate: Optional[int] = None
    modules: Dict[str, Dict[str, Any]] = {}
    error: Optional[str] = None

    def to_row(self) -> dict:
        return {
            "instance": self.instance,
            "domain": self.domain,
            "strategy": self.strategy,
            "mode": self.mode,
            "status": self.status,
            "wall_s": round(self.wall_time_total, 6),
            "lowlevel_s": round(self.time_lowlevel, 6),
            "n_feas": self.n_feasible,
            "n_infeas": self.n_infeasible,
            "checks_distinct": self.n_checks_distinct,
            "checks_total": self.n_checks_total,
            "restarts": self.n_restarts,
            "error": self.error or "",
        }


@dataclass
class RunOutcome:
    """What a strategy driver hands back to the profiler."""
    plans: list
    status: str
    n_infeasible: int = 0
    n_candidates: int = 0
    restarts: int = 0
    constraints: int = 0
    failing_keys: int = 0
    precompute: Optional[Any] = None
    problem: Optional[Any] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def _rss() -> Optional[int]:
    try:
        return int(psutil.Process().memory_info().rss)
    except (psutil.Error, OSError):
        return None


class RunProfiler:
    def __init__(self, cache: CheckCache, instance: str, domain: str, strategy: str,
                 mode: str, timeout_s: float):
        self.cache = cache
        self.labels = dict(instance=instance, domain=domain, strategy=strategy, mode=mode)
        self.timeout_s = timeout_s
        self._start = time.perf_counter()
        self._before = cache.snapshot()
        self._peak = _rss()

    def sample_memory(self) -> None:
        rss = _rss()
        if rss is not None and (self._peak is None or rss > self._peak):
            self._peak = rss

    def module_deltas(self) -> Dict[str, Dict[str, Any]]:
        deltas = {}
        for module_id, after in self.cache.snapshot().items():
            before = self._before.get(module_id)
            deltas[module_id] = {
                "distinct": after.distinct - (before.distinct if before else 0),
                "total": after.total - (before.total if before else 0),
                "seconds": round(after.seconds - (before.seconds if before else 0.0), 6),
                "failed": after.failed - (before.failed if before else 0),
            }
        return deltas

    def report(self, outcome: RunOutcome) -> RunReport:
        wall = time.perf_counter() - self._start
        self.sample_memory()
        modules = self.module_deltas()
        lowlevel = min(wall, sum(m["seconds"] for m in modules.values()))
        precompute = outcome.precompute
        plans = outcome.plans
        return RunReport(
            **self.labels,
            status=getattr(outcome.status, "value", outcome.status),
            timeout_s=self.timeout_s,
            wall_time_total=wall,
            time_lowlevel=lowlevel,
            time_highlevel=wall - lowlevel,
            n_feasible=len(plans),
            n_infeasible=outcome.n_infeasible,
            n_candidates=outcome.n_candidates,
            n_checks_distinct=sum(m["distinct"] for m in modules.values()),
            n_checks_total=sum(m["total"] for m in modules.values()),
            n_restarts=outcome.restarts,
            n_constraints=outcome.constraints,
            n_failing_keys=outcome.failing_keys,
            plan_length=len(plans[0]) if plans else None,
            precompute_checks=precompute.checks if precompute else 0,
            precompute_s=precompute.seconds if precompute else 0.0,
            peak_memory_estimate=self._peak,
            modules=modules,
        )


def instrument(run: Callable[[RunProfiler], RunOutcome], cache: CheckCache, *, instance: str,
               domain: str, strategy: str, mode: str, timeout_s: float):
    """Time `run` and attribute every check it causes; returns (outcome, report)."""
    profiler = RunProfiler(cache, instance, domain, strategy, mode, timeout_s)
    outcome = run(profiler)
    report = profiler.report(outcome)
    logger.info("%s [%s/%s]: %s, %d feasible, %d infeasible, %d/%d checks, %.3fs",
                instance, strategy, mode, report.status, report.n_feasible, report.n_infeasible,
                report.n_checks_distinct, report.n_checks_total, report.wall_time_total)
    return outcome, report


def reports_frame(reports: Sequence[Union[RunReport, dict]]) -> pd.DataFrame:
    rows = []
    for r in reports:
        if isinstance(r, RunReport):
            row = r.to_row()
            row["timeout_s"] = r.timeout_s
        else:
            row = dict(r)
        rows.append(row)
    return pd.DataFrame(rows)


def aggregate(reports: Union[pd.DataFrame, Sequence[Union[RunReport, dict]]],
              timeout: Optional[float] = None) -> pd.DataFrame:
    """Per domain, strategy and mode: run and timeout counts, means and maxima.

    Timed-out runs enter the time columns at the timeout cap.
    """
    frame = reports.copy() if isinstance(reports, pd.DataFrame) else reports_frame(reports)
    if frame.empty:
        raise ValueError("aggregate needs at least one report")

    timed_out = frame["status"] == "Timeout"
    if timeout is not None:
        frame.loc[timed_out, "wall_s"] = float(timeout)
    elif "timeout_s" in frame.columns:
        frame.loc[timed_out, "wall_s"] = frame.loc[timed_out, "timeout_s"].astype(float)

    metrics = [c for c in SUMMARY_METRICS if c in frame.columns]
    grouped = frame.groupby(["domain", "strategy", "mode"], sort=True)
    summary = grouped[metrics].agg(["mean", "max"])
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    summary.insert(0, "runs", grouped.size())
    summary.insert(1, "timeouts", grouped["status"].apply(lambda s: int((s == "Timeout").sum())))
    return summary.reset_index()


def write_reports(reports: Sequence[RunReport], csv_path, append: bool = True) -> pd.DataFrame:
    """Write report rows as CSV with a JSON mirror next to it (same field names)."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    fresh = pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)
    if append and csv_path.exists() and csv_path.stat().st_size > 0:
        existing = pd.read_csv(csv_path, keep_default_na=False)
        frame = pd.concat([existing, fresh], ignore_index=True)
    else:
        frame = fresh
    frame = frame.reindex(columns=REPORT_COLUMNS)
    frame.to_csv(csv_path, index=False)
    csv_path.with_suffix(".json").write_text(frame.to_json(orient="records", indent=2))
    return frame


def write_summary(summary: pd.DataFrame, csv_path) -> None:
    csv_path = Path(csv_path)
    summary.to_csv(csv_path, index=False)
    csv_path.with_suffix(".json").write_text(summary.to_json(orient="records", indent=2))
