"""Offline learning of CMCS configurations.

For every meaningful component subset, transition matrices are tuned by a
small population search: 50 random deterministic matrix pairs, then each
generation is 25 children of the generation best plus 25 children of the
best configuration seen so far. Subset winners are compared on a separate
validation set.

Every stochastic run gets its own seed derived from the master seed and the
task coordinates, so with iteration and generation budgets the whole
configurator is reproducible whatever the worker count.
"""
import enum
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import (
    AnyConfig,
    Budget,
    CmcsConfig,
    Component,
    ComponentKind,
    Strategy,
    TwoStageConfig,
    is_meaningful,
)
from .engine import Number, Problem, run_strategy
from .errors import ContractViolation
from .matrix import MatrixMutation, mutate_matrix, random_deterministic_matrix
from .pool import WorkerPool


logger = logging.getLogger(__name__)
training_log = logging.getLogger("cmcs.configurator.training")

MATRIX_MUTATIONS = tuple(MatrixMutation)

# Seed-sequence tags separating the independent random streams.
TRAINING_TAG = 0
VALIDATION_TAG = 1
SEARCH_TAG = 2

PER_RUN_MS = 1000
SEARCH_MINUTES = 4
STAGE_MINUTES = 2


@dataclass(frozen=True)
class ComponentPool:
    components: Tuple[Component, ...]

    def __post_init__(self) -> None:
        names = [component.name for component in self.components]
        if len(set(names)) != len(names):
            raise ContractViolation(f"component names must be unique: {names}")
        if not is_meaningful(self.components):
            raise ContractViolation(
                "component pool needs at least one mutation and one hill climber"
            )

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(component.name for component in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def count(self, kind: ComponentKind) -> int:
        return sum(1 for component in self.components if component.kind is kind)


class Scoring(enum.Enum):
    MEAN_OBJECTIVE = "mean-objective"
    MEAN_RELATIVE_ERROR = "mean-relative-error"


@dataclass(frozen=True)
class TrainingProtocol:
    """
    Every knob of the configurator.

    ``matrix_search`` and ``stage_search`` are wall-clock budgets per subset
    (per stage for Strategy C); in iteration mode they count generations.
    ``stage1_full`` evaluates the first Strategy C stage over the whole
    per-run budget; when false only the ``split`` share is used.
    """

    training: Tuple[Problem, ...]
    validation: Tuple[Problem, ...] = ()
    per_run_budget: Budget = Budget.ms(PER_RUN_MS)
    matrix_search: Budget = Budget.ms(SEARCH_MINUTES * 60_000)
    stage_search: Budget = Budget.ms(STAGE_MINUTES * 60_000)
    population_size: int = 50
    children_split: Tuple[int, int] = (25, 25)
    scoring: Scoring = Scoring.MEAN_OBJECTIVE
    baseline: Optional[Mapping[str, Number]] = None
    stage1_full: bool = True
    vnd_threshold: float = 0.5
    split: float = 0.8
    faithful_b: bool = False

    def __post_init__(self) -> None:
        if not self.training:
            raise ContractViolation("training set is empty")
        if self.population_size != sum(self.children_split):
            raise ContractViolation(
                f"population size {self.population_size} does not match "
                f"children split {self.children_split}"
            )
        if min(self.children_split) < 0 or self.population_size < 1:
            raise ContractViolation("population sizes must be positive")
        if self.scoring is Scoring.MEAN_RELATIVE_ERROR and self.baseline is None:
            raise ContractViolation("relative-error scoring needs a baseline table")

    @property
    def selection_set(self) -> Tuple[Problem, ...]:
        return self.validation or self.training


@dataclass(frozen=True)
class StrategyContext:
    """
    How a candidate matrix pair is turned into something runnable.

    For Strategy C, ``frozen`` is the sub-configuration held fixed and
    ``slot`` tells which sub-configuration the candidate fills. Without a
    frozen partner the candidate runs alone as Strategy A over
    ``budget_fraction`` of the per-run budget.
    """

    strategy: Strategy
    vnd: Tuple[Component, ...] = ()
    vnd_threshold: float = 0.5
    faithful_b: bool = False
    split: float = 0.8
    frozen: Optional[CmcsConfig] = None
    slot: int = 1
    budget_fraction: float = 1.0

    def candidate(self, cfg: CmcsConfig) -> Tuple[Strategy, AnyConfig]:
        if self.strategy is not Strategy.C:
            return self.strategy, cfg
        if self.frozen is None:
            return Strategy.A, cfg
        if self.slot == 1:
            return Strategy.C, TwoStageConfig(cfg, self.frozen, self.split)
        return Strategy.C, TwoStageConfig(self.frozen, cfg, self.split)


@dataclass(frozen=True)
class GenerationRecord:
    subset_id: str
    generation: int
    generation_best: float
    global_best: float
    evaluations: int

    def dump_line(self) -> str:
        return (
            f"{self.subset_id}\t{self.generation}\t"
            f"{self.generation_best!r}\t{self.global_best!r}\t{self.evaluations}"
        )


@dataclass(frozen=True)
class MatrixSearchResult:
    config: CmcsConfig
    score: float
    evaluations: int
    generations: Tuple[GenerationRecord, ...]


@dataclass(frozen=True)
class LeaderboardEntry:
    subset_id: str
    components: Tuple[Tuple[str, ...], ...]
    training_score: float
    validation_score: float
    evaluations: int
    config: AnyConfig = field(compare=False, repr=False)


@dataclass(frozen=True)
class ConfiguratorResult:
    strategy: Strategy
    winner: AnyConfig
    leaderboard: Tuple[LeaderboardEntry, ...]
    wall_time_s: float
    generations: Tuple[GenerationRecord, ...] = ()

    @property
    def best(self) -> LeaderboardEntry:
        return _first_min(self.leaderboard, lambda entry: entry.validation_score)

    @property
    def evaluations(self) -> int:
        return sum(entry.evaluations for entry in self.leaderboard)


def enumerate_meaningful_subsets(
    pool: ComponentPool, size: int
) -> List[Tuple[Component, ...]]:
    """All ``size``-subsets with both kinds, in lexicographic order of pool indices."""
    if not 2 <= size <= len(pool):
        raise ContractViolation(f"subset size must be in 2..{len(pool)}, got {size}")
    return [
        subset
        for subset in itertools.combinations(pool.components, size)
        if is_meaningful(subset)
    ]


def draw_operators(rng: np.random.Generator) -> Tuple[MatrixMutation, MatrixMutation]:
    first, second = rng.integers(len(MATRIX_MUTATIONS), size=2)
    return MATRIX_MUTATIONS[int(first)], MATRIX_MUTATIONS[int(second)]


def mutate_configuration(
    parent: CmcsConfig,
    rng: np.random.Generator,
    operators: Optional[Tuple[MatrixMutation, MatrixMutation]] = None,
) -> CmcsConfig:
    """Mutate ``m_succ`` and ``m_fail`` with two independently drawn operators."""
    succ_op, fail_op = operators or draw_operators(rng)
    return parent.with_matrices(
        mutate_matrix(parent.m_succ, succ_op, rng),
        mutate_matrix(parent.m_fail, fail_op, rng),
    )


@dataclass(frozen=True)
class _RunTask:
    strategy: Strategy
    config: AnyConfig
    context: StrategyContext
    problem: Problem
    budget: Budget
    entropy: Tuple[int, ...]


def _run_task(task: _RunTask) -> Number:
    rng = np.random.default_rng(np.random.SeedSequence(list(task.entropy)))
    s0 = task.problem.random_solution(rng)
    result = run_strategy(
        task.strategy,
        task.config,
        task.problem,
        s0,
        task.budget,
        rng,
        vnd_list=task.context.vnd,
        vnd_threshold=task.context.vnd_threshold,
        faithful_b=task.context.faithful_b,
    )
    return result.best_objective


def _score(
    values: Sequence[Number],
    instances: Sequence[Problem],
    scoring: Scoring,
    baseline: Optional[Mapping[str, Number]],
) -> float:
    if scoring is Scoring.MEAN_OBJECTIVE:
        return float(np.mean(values))
    if baseline is None:
        raise ContractViolation("relative-error scoring needs a baseline table")
    errors = []
    for value, problem in zip(values, instances):
        if problem.name not in baseline:
            raise ContractViolation(f"no baseline entry for {problem.name}")
        reference = baseline[problem.name]
        errors.append(100.0 * (value - reference) / reference)
    return float(np.mean(errors))


def _runnable(cfg: AnyConfig, context: StrategyContext) -> Tuple[Strategy, AnyConfig]:
    if isinstance(cfg, TwoStageConfig):
        return Strategy.C, cfg
    return context.candidate(cfg)


def _evaluate_population(
    configs: Sequence[AnyConfig],
    context: StrategyContext,
    instances: Sequence[Problem],
    budget: Budget,
    seed: Tuple[int, ...],
    scoring: Scoring,
    baseline: Optional[Mapping[str, Number]],
    workers: Optional[WorkerPool],
) -> List[float]:
    if not instances:
        raise ContractViolation("cannot evaluate on an empty instance set")
    run_budget = budget.scaled(context.budget_fraction)
    tasks = []
    for member, cfg in enumerate(configs):
        cfg.validate()
        strategy, runnable = _runnable(cfg, context)
        for index, problem in enumerate(instances):
            tasks.append(
                _RunTask(
                    strategy,
                    runnable,
                    context,
                    problem,
                    run_budget,
                    seed + (member, index),
                )
            )
    values = (workers or WorkerPool(1)).map(_run_task, tasks)
    width = len(instances)
    return [
        _score(values[m * width:(m + 1) * width], instances, scoring, baseline)
        for m in range(len(configs))
    ]


def evaluate_configuration(
    cfg: AnyConfig,
    context: StrategyContext,
    instances: Sequence[Problem],
    per_run_budget: Budget,
    seed: Tuple[int, ...],
    *,
    scoring: Scoring = Scoring.MEAN_OBJECTIVE,
    baseline: Optional[Mapping[str, Number]] = None,
    workers: Optional[WorkerPool] = None,
) -> float:
    """
    Run the strategy once per instance and average the chosen statistic.

    Lower is better. ``seed`` is a tuple of non-negative integers; run ``i``
    draws from ``SeedSequence(seed + (0, i))``.
    """
    return _evaluate_population(
        [cfg],
        context,
        instances,
        per_run_budget,
        tuple(seed),
        scoring,
        baseline,
        workers,
    )[0]


def _first_min(items: Sequence[Any], key: Any) -> Any:
    best = items[0]
    for item in items[1:]:
        if key(item) < key(best):
            best = item
    return best


def _expired(search: Budget, generations: int, start: float) -> bool:
    if search.is_iterations:
        return generations >= search.limit
    return (time.perf_counter() - start) * 1000.0 >= search.limit


def optimize_matrices(
    subset: Sequence[Component],
    context: StrategyContext,
    protocol: TrainingProtocol,
    seed: Tuple[int, ...],
    *,
    search: Optional[Budget] = None,
    incumbent: Optional[CmcsConfig] = None,
    subset_id: str = "0",
    workers: Optional[WorkerPool] = None,
) -> MatrixSearchResult:
    """
    Population search over the transition matrices of one component subset.

    ``incumbent`` replaces the first random member of the initial population
    so a re-optimised sub-configuration never scores worse than before.
    """
    components = tuple(subset)
    if not is_meaningful(components):
        raise ContractViolation(f"subset {subset_id} is not meaningful")
    search = search or protocol.matrix_search
    size = len(components)
    rng = np.random.default_rng(np.random.SeedSequence(list(seed) + [SEARCH_TAG]))

    population = [
        CmcsConfig(
            components,
            random_deterministic_matrix(size, rng),
            random_deterministic_matrix(size, rng),
        )
        for _ in range(protocol.population_size)
    ]
    if incumbent is not None:
        population[0] = incumbent

    best: Optional[CmcsConfig] = None
    best_score = math.inf
    evaluations = 0
    records: List[GenerationRecord] = []
    start = time.perf_counter()
    generation = 0
    while True:
        scores = _evaluate_population(
            population,
            context,
            protocol.training,
            protocol.per_run_budget,
            tuple(seed) + (TRAINING_TAG, generation),
            protocol.scoring,
            protocol.baseline,
            workers,
        )
        evaluations += len(population)
        leader = min(range(len(scores)), key=lambda index: (scores[index], index))
        if scores[leader] < best_score:
            best, best_score = population[leader], scores[leader]

        record = GenerationRecord(
            subset_id, generation, scores[leader], best_score, len(population)
        )
        records.append(record)
        training_log.info(record.dump_line())

        generation += 1
        if _expired(search, generation, start):
            break

        assert best is not None
        first, second = protocol.children_split
        population = [
            mutate_configuration(population[leader], rng) for _ in range(first)
        ] + [mutate_configuration(best, rng) for _ in range(second)]

    assert best is not None
    return MatrixSearchResult(best, best_score, evaluations, tuple(records))


def _context(
    strategy: Strategy, protocol: TrainingProtocol, vnd: Sequence[Component]
) -> StrategyContext:
    return StrategyContext(
        strategy=strategy,
        vnd=tuple(vnd),
        vnd_threshold=protocol.vnd_threshold,
        faithful_b=protocol.faithful_b,
        split=protocol.split,
    )


class _Trained(NamedTuple):
    subset_id: str
    components: Tuple[Tuple[str, ...], ...]
    config: AnyConfig
    score: float
    evaluations: int


def _validate(
    trained: Sequence[_Trained],
    strategy: Strategy,
    protocol: TrainingProtocol,
    context: StrategyContext,
    master: int,
    workers: Optional[WorkerPool],
) -> List[LeaderboardEntry]:
    board = []
    for entry in trained:
        score = evaluate_configuration(
            entry.config,
            context,
            protocol.selection_set,
            protocol.per_run_budget,
            (master, VALIDATION_TAG),
            scoring=protocol.scoring,
            baseline=protocol.baseline,
            workers=workers,
        )
        logger.info(
            "strategy %s subset %s: training %.4f, validation %.4f",
            strategy.value,
            entry.subset_id,
            entry.score,
            score,
        )
        board.append(
            LeaderboardEntry(
                entry.subset_id,
                entry.components,
                entry.score,
                score,
                entry.evaluations,
                entry.config,
            )
        )
    return board


def configure_single_stage(
    pool: ComponentPool,
    size: int,
    strategy: Strategy,
    protocol: TrainingProtocol,
    *,
    vnd: Sequence[Component] = (),
    seed: int = 0,
    workers: Optional[WorkerPool] = None,
) -> ConfiguratorResult:
    """Configure Strategy A or B; the best subset on the selection set wins."""
    if strategy is Strategy.C:
        raise ContractViolation("use configure_strategy_c for strategy C")
    if strategy is Strategy.B and not vnd:
        raise ContractViolation("strategy B needs a VND list")
    if strategy is Strategy.B and not protocol.faithful_b:
        logger.warning("strategy B returns the better of polished and chain best")

    subsets = enumerate_meaningful_subsets(pool, size)
    if not subsets:
        raise ContractViolation(f"no meaningful subsets of size {size}")
    start = time.perf_counter()
    context = _context(strategy, protocol, vnd)

    trained: List[_Trained] = []
    records: List[GenerationRecord] = []
    for index, subset in enumerate(subsets):
        subset_id = f"{strategy.value}{index}"
        found = optimize_matrices(
            subset,
            context,
            protocol,
            (seed, index),
            subset_id=subset_id,
            workers=workers,
        )
        records.extend(found.generations)
        names = (tuple(component.name for component in subset),)
        trained.append(
            _Trained(subset_id, names, found.config, found.score, found.evaluations)
        )

    board = _validate(trained, strategy, protocol, context, seed, workers)
    winner = _first_min(board, lambda entry: entry.validation_score)
    elapsed = time.perf_counter() - start
    return ConfiguratorResult(
        strategy, winner.config, tuple(board), elapsed, tuple(records)
    )


def configure_strategy_c(
    pool: ComponentPool,
    size: int,
    protocol: TrainingProtocol,
    *,
    distinct_pairs: bool = False,
    seed: int = 0,
    workers: Optional[WorkerPool] = None,
) -> ConfiguratorResult:
    """
    Configure Strategy C over ordered pairs of meaningful subsets.

    Each pair is trained in three stages of ``protocol.stage_search``:
    sub-configuration 1 alone, then sub-configuration 2 with 1 frozen, then
    1 again with 2 frozen.
    """
    subsets = enumerate_meaningful_subsets(pool, size)
    if not subsets:
        raise ContractViolation(f"no meaningful subsets of size {size}")
    pairs = [
        (a, b)
        for a in range(len(subsets))
        for b in range(len(subsets))
        if not (distinct_pairs and a == b)
    ]
    if not pairs:
        raise ContractViolation("no subset pairs to train")
    start = time.perf_counter()
    base = _context(Strategy.C, protocol, ())
    stage1 = StrategyContext(
        Strategy.C,
        split=protocol.split,
        budget_fraction=1.0 if protocol.stage1_full else protocol.split,
    )

    trained: List[_Trained] = []
    records: List[GenerationRecord] = []
    for index, (a, b) in enumerate(pairs):
        subset_id = f"C{a}-{b}"
        first = optimize_matrices(
            subsets[a],
            stage1,
            protocol,
            (seed, index, 1),
            search=protocol.stage_search,
            subset_id=f"{subset_id}/1",
            workers=workers,
        )
        second = optimize_matrices(
            subsets[b],
            StrategyContext(
                Strategy.C, split=protocol.split, frozen=first.config, slot=2
            ),
            protocol,
            (seed, index, 2),
            search=protocol.stage_search,
            subset_id=f"{subset_id}/2",
            workers=workers,
        )
        third = optimize_matrices(
            subsets[a],
            StrategyContext(
                Strategy.C, split=protocol.split, frozen=second.config, slot=1
            ),
            protocol,
            (seed, index, 3),
            incumbent=first.config,
            search=protocol.stage_search,
            subset_id=f"{subset_id}/3",
            workers=workers,
        )
        for found in (first, second, third):
            records.extend(found.generations)
        config = TwoStageConfig(third.config, second.config, protocol.split)
        names = (
            tuple(component.name for component in subsets[a]),
            tuple(component.name for component in subsets[b]),
        )
        evaluations = first.evaluations + second.evaluations + third.evaluations
        trained.append(_Trained(subset_id, names, config, third.score, evaluations))

    board = _validate(trained, Strategy.C, protocol, base, seed, workers)
    winner = _first_min(board, lambda entry: entry.validation_score)
    elapsed = time.perf_counter() - start
    return ConfiguratorResult(
        Strategy.C, winner.config, tuple(board), elapsed, tuple(records)
    )


def count_meaningful_subsets(mutations: int, hill_climbers: int, size: int) -> int:
    return sum(
        math.comb(mutations, m) * math.comb(hill_climbers, size - m)
        for m in range(1, size)
    )


def count_pairs(subsets: int, distinct_pairs: bool = False) -> int:
    return subsets * (subsets - 1) if distinct_pairs else subsets * subsets


def plan_training_minutes(
    strategy: Strategy,
    subsets: int,
    search_minutes: float,
    *,
    distinct_pairs: bool = False,
) -> float:
    """Predicted wall time; ``search_minutes`` is per subset, or per stage for C."""
    if strategy is Strategy.C:
        return count_pairs(subsets, distinct_pairs) * 3 * search_minutes
    return subsets * search_minutes


@dataclass(frozen=True)
class PlanRow:
    strategy: Strategy
    size: int
    component_sets: int
    minutes: float


def plan_row(
    strategy: Strategy,
    size: int,
    subsets: int,
    protocol_minutes: float,
    *,
    distinct_pairs: bool = False,
) -> PlanRow:
    sets = count_pairs(subsets, distinct_pairs) if strategy is Strategy.C else subsets
    minutes = plan_training_minutes(
        strategy, subsets, protocol_minutes, distinct_pairs=distinct_pairs
    )
    return PlanRow(strategy, size, sets, minutes)
