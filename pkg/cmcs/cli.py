"""Command-line front end: gen, train, solve, baseline, eval and export-config."""
import argparse
import contextlib
import csv
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import configurator as cf
from .ap3 import DEFAULT_POOL, DEFAULT_VND, Ap3Instance, Ap3Solution, Family
from .ap3 import baseline_config, generate_instance, resolve
from .config import AnyConfig, Budget, ComponentKind, Strategy, TwoStageConfig
from .curves import error_curve, log_grid, write_curves_csv
from .engine import RunResult, run_strategy
from .errors import CmcsError, ContractViolation
from .pool import WorkerPool
from .serialize import (
    TOOL_VERSION,
    BaselineTable,
    ConfigFile,
    ResultRecord,
    dump_baseline,
    dump_budget,
    dump_config,
    dump_result,
    load_baseline,
    load_config,
    load_result,
    read_text,
)


logger = logging.getLogger(__name__)

INSTANCE_SUFFIX = ".ap3"
DEFAULT_BASELINE_MS = 10_000
GENERATED_FAMILIES = (Family.RANDOM, Family.CLIQUE, Family.SQUARE_ROOT)
LEADERBOARD_COLUMNS = (
    "subset",
    "components",
    "training_score",
    "validation_score",
    "evaluations",
)


def _csv_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in _csv_list(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers: {value!r}")


def _budget(args: argparse.Namespace, default_ms: float) -> Budget:
    if args.budget_iters is not None:
        return Budget.iterations(args.budget_iters)
    if args.budget_ms is not None:
        return Budget.ms(args.budget_ms)
    return Budget.ms(default_ms)


def _search_budget(
    generations: Optional[int], ms: Optional[float], default_minutes: float
) -> Budget:
    if generations is not None:
        return Budget.iterations(generations)
    if ms is not None:
        return Budget.ms(ms)
    return Budget.ms(default_minutes * 60_000)


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(entropy)))


def _instance_paths(location: str) -> List[Path]:
    path = Path(location)
    if path.is_dir():
        paths = sorted(path.glob(f"*{INSTANCE_SUFFIX}"))
        if not paths:
            raise ContractViolation(f"no {INSTANCE_SUFFIX} files in {path}")
        return paths
    return [path]


def _load_instances(location: Optional[str]) -> Tuple[Ap3Instance, ...]:
    if location is None:
        return ()
    return tuple(Ap3Instance.load(path) for path in _instance_paths(location))


def _load_config(path: str) -> ConfigFile:
    return load_config(read_text(path), resolve)


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f


@contextlib.contextmanager
def _training_log(path: Optional[str]) -> Iterator[None]:
    if path is None:
        yield
        return
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(message)s"))
    training_log = cf.training_log
    level, propagate = training_log.level, training_log.propagate
    training_log.addHandler(handler)
    training_log.setLevel(logging.INFO)
    training_log.propagate = False
    try:
        yield
    finally:
        training_log.removeHandler(handler)
        training_log.setLevel(level)
        training_log.propagate = propagate
        handler.close()


@dataclass(frozen=True)
class _SolveTask:
    strategy: Strategy
    config: AnyConfig
    vnd: Tuple[Any, ...]
    vnd_threshold: float
    faithful_b: bool
    instance: Ap3Instance
    budget: Budget
    entropy: Tuple[int, ...]


def _solve(task: _SolveTask) -> RunResult:
    rng = _rng(*task.entropy)
    s0 = task.instance.random_solution(rng)
    return run_strategy(
        task.strategy,
        task.config,
        task.instance,
        s0,
        task.budget,
        rng,
        vnd_list=task.vnd,
        vnd_threshold=task.vnd_threshold,
        faithful_b=task.faithful_b,
    )


def _task(
    file: ConfigFile,
    instance: Ap3Instance,
    budget: Budget,
    entropy: Tuple[int, ...],
    strategy: Optional[Strategy] = None,
) -> _SolveTask:
    strategy = strategy or file.strategy
    vnd = file.vnd
    if strategy is Strategy.B and not vnd:
        vnd = resolve(DEFAULT_VND)
    return _SolveTask(
        strategy,
        file.config,
        vnd,
        file.vnd_threshold,
        file.faithful_b,
        instance,
        budget,
        entropy,
    )


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        families = [Family(name) for name in args.families]
    except ValueError as e:
        raise ContractViolation(str(e)) from None
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for family in families:
        if family not in GENERATED_FAMILIES:
            raise ContractViolation(f"cannot generate {family.value} instances")
        for n in args.sizes:
            for index in range(args.count):
                entropy = [args.seed, GENERATED_FAMILIES.index(family), n, index]
                seed = int(np.random.SeedSequence(entropy).generate_state(1)[0])
                name = f"{family.value}-{n}-{index:02d}"
                instance = generate_instance(
                    family, n, seed, name=name, sqrt_exact=args.sqrt_exact
                )
                instance.save(out / f"{name}{INSTANCE_SUFFIX}")
                written += 1
    logger.info("wrote %d instances to %s", written, out)
    return 0


def _pool(names: Sequence[str]) -> cf.ComponentPool:
    return cf.ComponentPool(resolve(names))


def _print_plan(
    args: argparse.Namespace, pool: cf.ComponentPool, strategy: Strategy
) -> int:
    subsets = cf.count_meaningful_subsets(
        pool.count(ComponentKind.MUTATION),
        pool.count(ComponentKind.HILL_CLIMBER),
        args.size,
    )
    if strategy is Strategy.C:
        search = _search_budget(None, args.stage_search_ms, cf.STAGE_MINUTES)
    else:
        search = _search_budget(None, args.search_ms, cf.SEARCH_MINUTES)
    row = cf.plan_row(
        strategy,
        args.size,
        subsets,
        search.limit / 60_000,
        distinct_pairs=args.distinct_pairs,
    )
    with _output(args.out) as stream:
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(["strategy", "size", "component_sets", "minutes"])
        minutes = repr(row.minutes)
        writer.writerow([row.strategy.value, row.size, row.component_sets, minutes])
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    strategy = Strategy(args.strategy)
    pool = _pool(args.pool)
    if args.plan:
        return _print_plan(args, pool, strategy)
    if args.training is None:
        raise ContractViolation("train needs --training")

    baseline = None
    if args.baseline is not None:
        baseline = load_baseline(read_text(args.baseline)).entries
    per_run = _budget(args, cf.PER_RUN_MS)
    protocol = cf.TrainingProtocol(
        training=_load_instances(args.training),
        validation=_load_instances(args.validation),
        per_run_budget=per_run,
        matrix_search=_search_budget(
            args.search_generations, args.search_ms, cf.SEARCH_MINUTES
        ),
        stage_search=_search_budget(
            args.stage_search_generations, args.stage_search_ms, cf.STAGE_MINUTES
        ),
        scoring=cf.Scoring(args.scoring),
        baseline=baseline,
        stage1_full=not args.stage1_split,
        vnd_threshold=args.vnd_threshold,
        split=args.split,
        faithful_b=args.faithful_b,
    )
    vnd = resolve(args.vnd) if strategy is Strategy.B else ()

    with WorkerPool(args.workers) as workers, _training_log(args.log):
        if strategy is Strategy.C:
            result = cf.configure_strategy_c(
                pool,
                args.size,
                protocol,
                distinct_pairs=args.distinct_pairs,
                seed=args.seed,
                workers=workers,
            )
        else:
            result = cf.configure_single_stage(
                pool,
                args.size,
                strategy,
                protocol,
                vnd=vnd,
                seed=args.seed,
                workers=workers,
            )

    budgets: Dict[str, Any] = {"per_run": dump_budget(per_run)}
    if strategy is Strategy.C:
        budgets["stage_search"] = dump_budget(protocol.stage_search)
    else:
        budgets["matrix_search"] = dump_budget(protocol.matrix_search)
    provenance = {
        "seed": args.seed,
        "budgets": budgets,
        "pool": list(pool.names),
        "size": args.size,
        "scoring": protocol.scoring.value,
        "tool_version": TOOL_VERSION,
    }
    file = ConfigFile(
        strategy,
        result.winner,
        tuple(vnd),
        args.vnd_threshold,
        args.faithful_b,
        provenance,
    )
    with _output(args.out) as stream:
        stream.write(dump_config(file))
    if args.leaderboard is not None:
        _write_leaderboard(args.leaderboard, result)
    logger.info(
        "strategy %s trained in %.1f s with %d evaluations",
        strategy.value,
        result.wall_time_s,
        result.evaluations,
    )
    return 0


def _write_leaderboard(path: str, result: cf.ConfiguratorResult) -> None:
    with _output(path) as stream:
        stream.write(f"# wall_time_s\t{result.wall_time_s!r}\n")
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(LEADERBOARD_COLUMNS)
        for entry in result.leaderboard:
            writer.writerow(
                [
                    entry.subset_id,
                    " | ".join(",".join(names) for names in entry.components),
                    repr(entry.training_score),
                    repr(entry.validation_score),
                    entry.evaluations,
                ]
            )


def cmd_solve(args: argparse.Namespace) -> int:
    file = _load_config(args.config)
    instance = Ap3Instance.load(args.instance)
    strategy = Strategy(args.strategy) if args.strategy else None
    budget = _budget(args, cf.PER_RUN_MS)
    task = _task(file, instance, budget, (args.seed,), strategy)
    result = _solve(task)
    record = ResultRecord(instance.name, task.strategy, args.seed, budget, result)
    with _output(args.out) as stream:
        stream.write(dump_result(record))
    logger.info("%s: best objective %s", instance.name, result.best_objective)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    instances = _load_instances(args.instances)
    budget = _budget(args, DEFAULT_BASELINE_MS)
    if args.repeats < 1:
        raise ContractViolation(f"repeats must be positive, got {args.repeats}")
    files = [ConfigFile(Strategy.A, baseline_config(inst.n)) for inst in instances]
    tasks = [
        _task(files[index], instance, budget, (args.seed, index, repeat))
        for index, instance in enumerate(instances)
        for repeat in range(args.repeats)
    ]
    with WorkerPool(args.workers) as workers:
        results = workers.map(_solve, tasks)

    methods = list(dict.fromkeys("/".join(file.config.names) for file in files))
    entries = {}
    for index, instance in enumerate(instances):
        runs = results[index * args.repeats:(index + 1) * args.repeats]
        entries[instance.name] = min(run.best_objective for run in runs)
    table = BaselineTable(
        entries,
        {
            "method": "strategy A, " + ", ".join(methods),
            "budget": dump_budget(budget),
            "seed": args.seed,
            "repeats": args.repeats,
            "tool_version": TOOL_VERSION,
        },
    )
    with _output(args.out) as stream:
        stream.write(dump_baseline(table))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    instances = _load_instances(args.instances)
    table = load_baseline(read_text(args.baseline))
    missing = table.missing(instance.name for instance in instances)
    if missing:
        raise ContractViolation(f"no baseline entries for {', '.join(missing)}")
    budget = _budget(args, cf.PER_RUN_MS)
    grid = log_grid(budget, args.grid_points)

    curves = []
    with WorkerPool(args.workers) as workers:
        for path in args.configs:
            file = _load_config(path)
            # Same seeds for every configuration, so all start from the same points.
            tasks = [
                _task(file, instance, budget, (args.seed, index, repeat))
                for index, instance in enumerate(instances)
                for repeat in range(args.repeats)
            ]
            results = workers.map(_solve, tasks)
            runs = [
                (result.trace, table[task.instance.name])
                for task, result in zip(tasks, results)
            ]
            curves.append(error_curve(Path(path).stem, runs, grid))
            logger.info("%s: final error %.3f%%", path, curves[-1].final_error)

    with _output(args.out) as stream:
        write_curves_csv(curves, stream)
    return 0


def _stages(config: AnyConfig) -> List[Any]:
    if isinstance(config, TwoStageConfig):
        return [config.sub1, config.sub2]
    return [config]


def cmd_export_config(args: argparse.Namespace) -> int:
    file = _load_config(args.config)
    stages = _stages(file.config)
    record: Optional[ResultRecord] = None
    if args.record is not None:
        record = load_result(read_text(args.record), Ap3Solution.from_dict)
        counted = record.result.transitions
        if len(counted) > len(stages) or any(
            len(counts.succ) != sub.size for counts, sub in zip(counted, stages)
        ):
            raise ContractViolation("result record does not match the configuration")

    with _output(args.out) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["stage", "from", "to", "outcome", "probability", "observed"])
        for stage, sub in enumerate(stages, start=1):
            counts = None
            if record is not None and stage <= len(record.result.transitions):
                counts = record.result.transitions[stage - 1]
            for outcome, matrix in (("succ", sub.m_succ), ("fail", sub.m_fail)):
                observed = None if counts is None else getattr(counts, outcome)
                for source, row in enumerate(matrix):
                    total = 0 if observed is None else sum(observed[source])
                    for target, numerator in enumerate(row):
                        frequency = ""
                        if observed is not None and total:
                            frequency = repr(observed[source][target] / total)
                        writer.writerow(
                            [
                                stage,
                                sub.components[source].name,
                                sub.components[target].name,
                                outcome,
                                str(Fraction(numerator, matrix.denominator)),
                                frequency,
                            ]
                        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    budget = common.add_mutually_exclusive_group()
    budget.add_argument("--budget-ms", type=float, help="per-run wall-clock budget")
    budget.add_argument("--budget-iters", type=int, help="per-run applications")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output file or directory (default: stdout)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="cmcs", description="Conditional Markov chain search for AP3."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", parents=[common], help="generate instances")
    gen.add_argument(
        "--families", type=_csv_list, default=[f.value for f in GENERATED_FAMILIES]
    )
    gen.add_argument("--size", "--sizes", dest="sizes", type=_int_list, default=[40])
    gen.add_argument("--count", type=int, default=1, help="instances per size")
    gen.add_argument("--sqrt-exact", action="store_true", help="unrounded sqrt costs")
    gen.set_defaults(func=cmd_gen)

    train = commands.add_parser("train", parents=[common], help="train a configuration")
    train.add_argument("--strategy", choices=[s.value for s in Strategy], default="A")
    train.add_argument("--pool", type=_csv_list, default=list(DEFAULT_POOL))
    train.add_argument("--size", type=int, default=2, help="components per subset")
    train.add_argument("--training", help="training instance directory")
    train.add_argument("--validation", help="validation instance directory")
    train.add_argument("--search-ms", type=float, help="matrix search time per subset")
    train.add_argument("--search-generations", type=int)
    train.add_argument("--stage-search-ms", type=float, help="time per C stage")
    train.add_argument("--stage-search-generations", type=int)
    train.add_argument("--vnd", type=_csv_list, default=list(DEFAULT_VND))
    train.add_argument("--vnd-threshold", type=float, default=0.5)
    train.add_argument("--faithful-b", action="store_true")
    train.add_argument("--split", type=float, default=0.8)
    train.add_argument("--stage1-split", action="store_true")
    train.add_argument("--distinct-pairs", action="store_true")
    train.add_argument(
        "--scoring", choices=[s.value for s in cf.Scoring], default="mean-objective"
    )
    train.add_argument("--baseline", help="baseline table for relative-error scoring")
    train.add_argument("--log", help="training log file")
    train.add_argument("--leaderboard", help="leaderboard TSV file")
    train.add_argument("--plan", action="store_true", help="print predicted time")
    train.set_defaults(func=cmd_train)

    solve = commands.add_parser("solve", parents=[common], help="run one configuration")
    solve.add_argument("--config", required=True)
    solve.add_argument("--instance", required=True)
    solve.add_argument("--strategy", choices=[s.value for s in Strategy])
    solve.set_defaults(func=cmd_solve)

    baseline = commands.add_parser(
        "baseline", parents=[common], help="best-known objectives"
    )
    baseline.add_argument("--instances", required=True)
    baseline.add_argument("--repeats", type=int, default=3)
    baseline.set_defaults(func=cmd_baseline)

    evaluate = commands.add_parser("eval", parents=[common], help="error curves")
    evaluate.add_argument("--configs", nargs="+", required=True)
    evaluate.add_argument("--instances", required=True)
    evaluate.add_argument("--baseline", required=True)
    evaluate.add_argument("--repeats", type=int, default=1)
    evaluate.add_argument("--grid-points", type=int, default=20)
    evaluate.set_defaults(func=cmd_eval)

    export = commands.add_parser(
        "export-config", parents=[common], help="transition frequencies"
    )
    export.add_argument("--config", required=True)
    export.add_argument("--record", help="result record with transition counts")
    export.set_defaults(func=cmd_export_config)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except CmcsError as e:
        logger.error("%s", e)
        return 2
    except OSError as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
