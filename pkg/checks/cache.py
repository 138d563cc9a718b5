"""
Counting cache in front of the check modules, plus the persisted check table.

Counters are kept per module so a run report can attribute checks and time.
Evaluation happens outside the lock; only bookkeeping is serialized.
"""

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional

from checks.modules import CheckKey, CheckModule, CheckResult, CheckUnavailable

logger = logging.getLogger(__name__)


@dataclass
class ModuleCounters:
    distinct: int = 0
    total: int = 0
    seconds: float = 0.0
    failed: int = 0

    def as_dict(self) -> dict:
        return {
            "distinct": self.distinct,
            "total": self.total,
            "seconds": round(self.seconds, 6),
            "failed": self.failed,
        }


class CheckCache:
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._lock = threading.Lock()
        self._results: Dict[CheckKey, CheckResult] = {}
        self._counters: Dict[str, ModuleCounters] = {}
        self.preloaded = 0

    def _counter(self, module_id: str) -> ModuleCounters:
        counter = self._counters.get(module_id)
        if counter is None:
            counter = self._counters[module_id] = ModuleCounters()
        return counter

    def query(self, module: CheckModule, key: CheckKey) -> CheckResult:
        with self._lock:
            counter = self._counter(module.module_id)
            counter.total += 1
            if self.enabled:
                hit = self._results.get(key)
                if hit is not None:
                    return hit

        try:
            result = module.evaluate(key)
        except Exception as e:
            raise CheckUnavailable(key, e) from e

        with self._lock:
            counter = self._counter(module.module_id)
            if self.enabled:
                stored = self._results.get(key)
                if stored is not None:
                    # another thread evaluated it meanwhile
                    return stored
                self._results[key] = result
            counter.distinct += 1
            counter.seconds += result.elapsed
            if not result.feasible:
                counter.failed += 1
        return result

    def feasible(self, module: CheckModule, key: CheckKey) -> bool:
        return self.query(module, key).feasible

    def record(self, module: CheckModule, key: CheckKey, feasible: bool, elapsed: float) -> None:
        """Account for a verdict computed outside `query` (dedicated precomputation)."""
        with self._lock:
            counter = self._counter(module.module_id)
            counter.total += 1
            if self.enabled and key in self._results:
                return
            if self.enabled:
                self._results[key] = CheckResult(feasible, elapsed)
            counter.distinct += 1
            counter.seconds += elapsed
            if not feasible:
                counter.failed += 1

    def preload(self, table: Mapping[CheckKey, bool]) -> int:
        """Seed verdicts from a persisted table; loaded keys cost nothing and
        are not counted as evaluations."""
        if not self.enabled:
            return 0
        added = 0
        with self._lock:
            for key, feasible in table.items():
                if key not in self._results:
                    self._results[key] = CheckResult(bool(feasible), 0.0)
                    added += 1
            self.preloaded += added
        logger.info("Preloaded %d check verdicts", added)
        return added

    def verdicts(self, module_ids: Optional[Iterable[str]] = None) -> Dict[CheckKey, bool]:
        wanted = set(module_ids) if module_ids is not None else None
        with self._lock:
            return {
                k: r.feasible for k, r in self._results.items()
                if wanted is None or k.module in wanted
            }

    def __contains__(self, key: CheckKey) -> bool:
        return key in self._results

    def __len__(self):
        return len(self._results)

    @property
    def distinct_evaluations(self) -> int:
        return sum(c.distinct for c in self._counters.values())

    @property
    def total_queries(self) -> int:
        return sum(c.total for c in self._counters.values())

    @property
    def time_in_checks(self) -> float:
        return sum(c.seconds for c in self._counters.values())

    def snapshot(self) -> Dict[str, ModuleCounters]:
        with self._lock:
            return {m: ModuleCounters(**vars(c)) for m, c in self._counters.items()}


def save_table(path, table: Mapping[CheckKey, bool]) -> int:
    """Write `moduleid,key...,0|1` records sorted by module and key."""
    records = [
        ",".join([key.module, *(str(v) for v in key.values), "1" if feasible else "0"])
        for key, feasible in sorted(table.items())
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{r}\n" for r in records))
    return len(records)


def load_table(path) -> Dict[CheckKey, bool]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Check table not found: {path}")
    table: Dict[CheckKey, bool] = {}
    with path.open() as lines:
        # blank lines are skipped but still counted, so errors name the physical line
        for line_no, line in enumerate(lines, start=1):
            record = line.strip()
            if record:
                key, feasible = _parse_record(path, line_no, record)
                table[key] = feasible
    return table


def _parse_record(path, line_no: int, record: str):
    fields = record.split(",")
    if len(fields) < 2 or fields[-1] not in ("0", "1"):
        raise ValueError(f"{path}:{line_no}: malformed check record {record!r}")
    try:
        values = tuple(int(v) for v in fields[1:-1])
    except ValueError:
        raise ValueError(f"{path}:{line_no}: non-integer key in {record!r}")
    return CheckKey(fields[0], values), fields[-1] == "1"
