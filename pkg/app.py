import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

# Import Agents
from agents.benchmark_agent import DEFAULT_STRATEGIES, BenchmarkAgent, solve_instance
from agents.ingestion_agent import IngestionAgent
from agents.postcheck_agent import PostCheckAgent
from agents.precompute_agent import PrecomputeAgent
from agents.profiling_agent import aggregate, write_reports, write_summary
from agents.strategy_agent import InvalidAssignment
from checks.cache import CheckCache, save_table
from checks.modules import CheckUnavailable, PrecomputationUnsupported
from domains.errors import GenerationExhausted, InvalidInstance
from domains.generator import generate_suite, suite_metadata
from domains.instance_io import write_instance
from domains.registry import DOMAINS, build_modules, build_problem, default_horizon, domain_of, get_domain
from planning.model import ConflictingPair, PreconditionViolated, replay, validate_history
from planning.planner import EnumerationConfig, EnumerationStatus

logger = logging.getLogger("hybridplan")

EXIT_OK = 0
EXIT_NO_PLAN = 1
EXIT_LIMIT = 2
EXIT_USAGE = 3

REPORT_ENV = "HYBRIDPLAN_REPORT"
CACHE_ENV = "HYBRIDPLAN_CACHE"


class CliConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    subcommand: Literal["solve", "bench", "gen", "precompute", "validate"]
    domain: Optional[str] = None
    instances: List[str] = []
    strategy: str = "int"
    assign: Optional[str] = None
    mode: Literal["first", "all"] = "first"
    max_plans: int = Field(10000, ge=1)
    timeout_s: float = Field(7200.0, gt=0)
    horizon_max: Optional[int] = Field(None, ge=0)
    seed: int = 0
    report: Optional[str] = None
    cache: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        instances = getattr(args, "instance", None) or []
        if isinstance(instances, str):
            instances = [instances]
        return cls(
            subcommand=args.command,
            domain=getattr(args, "domain", None),
            instances=[str(p) for p in instances],
            strategy=getattr(args, "strategy", None) or "int",
            assign=getattr(args, "assign", None),
            mode=getattr(args, "mode", None) or "first",
            max_plans=getattr(args, "max_plans", 10000),
            timeout_s=getattr(args, "timeout", 7200.0),
            horizon_max=getattr(args, "horizon", None),
            seed=getattr(args, "seed", 0),
            report=getattr(args, "report", None) or os.environ.get(REPORT_ENV),
            cache=getattr(args, "cache", None) or os.environ.get(CACHE_ENV),
        )

    def enumeration(self, horizon: int, mode: Optional[str] = None) -> EnumerationConfig:
        return EnumerationConfig(horizon_max=horizon, max_plans=self.max_plans,
                                 timeout=self.timeout_s, mode=mode or self.mode)


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with status 3 like every other input error."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-plans", type=int, default=10000, help="plan / candidate cap (default 10000)")
    p.add_argument("--timeout", type=float, default=7200.0, help="wall-clock limit per run in seconds")
    p.add_argument("--horizon", type=int, default=None, help="maximum plan length (default per instance)")
    p.add_argument("--cache", default=None, help=f"check table file or directory (env {CACHE_ENV})")
    p.add_argument("--dedicated", action="store_true", help="use dedicated precomputation where available")
    p.add_argument("--workers", type=int, default=1, help="threads for precomputation")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="hybridplan", description="Hybrid planning with low-level feasibility checks")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="plan one instance with one strategy")
    solve.add_argument("--domain", choices=sorted(DOMAINS))
    solve.add_argument("--instance", required=True)
    solve.add_argument("--strategy", default="int",
                       help="pre | int | filt | repl | batchrepl:K | pre+X | off")
    solve.add_argument("--assign", default=None, help="per-module roles, e.g. L_bal=int,L_leg=pre")
    solve.add_argument("--mode", choices=["first", "all"], default="first")
    solve.add_argument("--report", default=None, help=f"append the run report to this CSV (env {REPORT_ENV})")
    solve.add_argument("--json", action="store_true", help="print plans and report as JSON")
    solve.add_argument("--plans-out", default=None, help="write plans as JSON")
    solve.add_argument("--no-cache", action="store_true", help="evaluate every check query")
    _add_search_options(solve)
    solve.set_defaults(handler=cmd_solve)

    bench = sub.add_parser("bench", help="run instances x strategies x modes")
    bench.add_argument("--suite", default=None, help="directory of instance files")
    bench.add_argument("--instance", action="append", default=[], help="instance file (repeatable)")
    bench.add_argument("--strategies", default=",".join(DEFAULT_STRATEGIES))
    bench.add_argument("--modes", default="first,all")
    bench.add_argument("--report", default=None, help=f"report CSV (env {REPORT_ENV})")
    bench.add_argument("--summary", default=None, help="write the aggregated summary CSV here")
    _add_search_options(bench)
    bench.set_defaults(handler=cmd_bench)

    gen = sub.add_parser("gen", help="generate a seeded instance suite")
    gen.add_argument("--domain", choices=sorted(DOMAINS), required=True)
    gen.add_argument("--count", type=int, default=20)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--grid", type=int, default=None)
    gen.add_argument("--objects", type=int, default=1, help="payloads per manipulation instance")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--verify", action="store_true", help="keep only instances Int solves")
    gen.add_argument("--verify-timeout", type=float, default=60.0)
    gen.set_defaults(handler=cmd_gen)

    pre = sub.add_parser("precompute", help="evaluate check modules over their input space")
    pre.add_argument("--domain", choices=sorted(DOMAINS))
    pre.add_argument("--instance", required=True)
    pre.add_argument("--module", action="append", default=[], help="module id (repeatable)")
    pre.add_argument("--out", default=None, help="table path (default: --cache or next to the instance)")
    pre.add_argument("--cache", default=None)
    pre.add_argument("--dedicated", action="store_true")
    pre.add_argument("--workers", type=int, default=1)
    pre.set_defaults(handler=cmd_precompute)

    validate = sub.add_parser("validate", help="validate instances and stored plans")
    validate.add_argument("--domain", choices=sorted(DOMAINS))
    validate.add_argument("--instance", action="append", required=True)
    validate.add_argument("--plans", default=None, help="plans JSON written by solve --plans-out")
    validate.set_defaults(handler=cmd_validate)
    return parser


def _plans_payload(plans) -> dict:
    return {"plans": [p.to_dict() for p in plans]}


def cmd_solve(args) -> int:
    config = CliConfig.from_args(args)
    ingestion = IngestionAgent()
    path = Path(config.instances[0])
    instance = ingestion.load_instance(path, config.domain)
    horizon = config.horizon_max if config.horizon_max is not None else default_horizon(instance)
    table = ingestion.load_check_table(ingestion.table_path(config.cache, path))

    result = solve_instance(instance, config.strategy, config.enumeration(horizon),
                            assign=config.assign, table=table, dedicated=args.dedicated,
                            workers=args.workers, use_cache=not args.no_cache)
    report = result.report

    if config.report:
        write_reports([report], config.report, append=True)
    if args.plans_out:
        Path(args.plans_out).write_text(json.dumps(_plans_payload(result.plans), indent=2))

    if args.json:
        print(json.dumps({"report": report.model_dump(), **_plans_payload(result.plans)}, indent=2))
    else:
        for k, plan in enumerate(result.plans, start=1):
            print(f"plan {k} (length {len(plan)})")
            for line in plan.step_lines():
                print(f"  {line}")
        print(f"{'✅' if result.plans else '❌'} {report.status}: {report.n_feasible} feasible, "
              f"{report.n_infeasible} infeasible, checks {report.n_checks_distinct}/{report.n_checks_total}, "
              f"{report.wall_time_total:.3f}s")

    if result.plans:
        return EXIT_OK
    if report.status == EnumerationStatus.NO_PLAN.value:
        return EXIT_NO_PLAN
    return EXIT_LIMIT


def cmd_bench(args) -> int:
    config = CliConfig.from_args(args)
    ingestion = IngestionAgent()
    paths = [Path(p) for p in config.instances]
    if args.suite:
        paths.extend(ingestion.list_suite(args.suite))
    if not paths:
        raise ValueError("bench needs --suite or at least one --instance")
    if not config.report:
        raise ValueError(f"bench needs --report or {REPORT_ENV}")

    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in ("first", "all"):
            raise ValueError(f"Unknown mode: {mode}. Supported: ['first', 'all']")

    agent = BenchmarkAgent(
        paths, strategies, modes,
        config=config.enumeration(config.horizon_max if config.horizon_max is not None else 12),
        report_path=config.report, cache=config.cache, dedicated=args.dedicated,
        horizon_override=config.horizon_max is not None,
    )
    frame = agent.run()
    print(f"✅ {len(frame)} rows in {config.report}")
    if args.summary and not frame.empty:
        summary = aggregate(frame, timeout=config.timeout_s)
        write_summary(summary, args.summary)
        print(summary.to_string(index=False))
    return EXIT_OK


def _solvable_by_int(timeout: float):
    def verify(instance) -> bool:
        config = EnumerationConfig(horizon_max=default_horizon(instance), timeout=timeout)
        return bool(solve_instance(instance, "int", config).plans)
    return verify


def cmd_gen(args) -> int:
    config = CliConfig.from_args(args)
    spec = get_domain(config.domain)
    options = {"objects": args.objects} if spec.name == "manipulation" else {}
    verifier = _solvable_by_int(args.verify_timeout) if args.verify else None
    suite = generate_suite(spec.name, args.count, config.seed, grid=args.grid, verifier=verifier, **options)

    out = Path(args.out)
    for instance in suite:
        write_instance(out / f"{instance.name}{spec.extension}", instance)
    suite_metadata(suite).to_csv(out / "suite.csv", index=False)
    logger.info("Suite metadata written to %s", out / "suite.csv")
    print(f"✅ {len(suite)} {spec.name} instances written to {out}")
    return EXIT_OK


def cmd_precompute(args) -> int:
    config = CliConfig.from_args(args)
    ingestion = IngestionAgent()
    path = Path(config.instances[0])
    instance = ingestion.load_instance(path, config.domain)
    modules = build_modules(instance)

    if args.module:
        by_id = {m.module_id: m for m in modules}
        unknown = [m for m in args.module if m not in by_id]
        if unknown:
            raise ValueError(f"Unknown check modules: {unknown}. Available: {sorted(by_id)}")
        selected = [by_id[m] for m in args.module]
    else:
        selected = [m for m in modules if m.precomputable]
        if not selected:
            raise PrecomputationUnsupported(",".join(m.module_id for m in modules))

    cache = CheckCache()
    agent = PrecomputeAgent(selected, cache, dedicated=args.dedicated, workers=args.workers)
    results = agent.evaluate_all()
    table = {k: ok for verdicts in results.values() for k, ok in verdicts.items()}

    out = Path(args.out) if args.out else ingestion.table_path(config.cache, path)
    if out is None:
        out = path.with_name(f"{path.stem}.checks.csv")
    rows = save_table(out, table)
    for module_id, verdicts in results.items():
        failed = sum(1 for ok in verdicts.values() if not ok)
        print(f"  {module_id}: {len(verdicts)} keys, {failed} infeasible")
    print(f"✅ {rows} check verdicts written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = CliConfig.from_args(args)
    ingestion = IngestionAgent()
    problems = []
    for raw in config.instances:
        instance = ingestion.load_instance(raw, config.domain)
        problems.append((instance, build_problem(instance)))
        print(f"✅ {instance.name}: valid {domain_of(instance).name} instance")

    if not args.plans:
        return EXIT_OK
    if len(problems) != 1:
        raise ValueError("--plans needs exactly one --instance")
    instance, problem = problems[0]
    checker = PostCheckAgent(build_modules(instance), [], CheckCache())

    invalid = 0
    for k, steps in enumerate(ingestion.load_plans(args.plans), start=1):
        notes: List[str] = []
        try:
            history = replay(problem, steps)
        except (PreconditionViolated, ConflictingPair, KeyError) as e:
            notes.append(str(e))
            history = None
        if history is not None and validate_history(problem, history, notes):
            refutation = checker.refute(history)
            if refutation is not None:
                notes.append(f"step {refutation.step}: check {refutation.failures[0][1]} fails")
        if notes:
            invalid += 1
            print(f"❌ plan {k}: {notes[0]}")
        else:
            print(f"✅ plan {k}: valid, length {len(history)}")
    return EXIT_NO_PLAN if invalid else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (InvalidInstance, InvalidAssignment, PrecomputationUnsupported, CheckUnavailable,
            GenerationExhausted, FileNotFoundError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
