"""CMCS execution: Strategies A, B and C plus the VND subroutine.

A run is strictly sequential and owns its :class:`EngineState`; the problem
object is only read, so several runs may share it from different workers as
long as each brings its own random generator.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .config import (
    AnyConfig,
    Budget,
    CmcsConfig,
    Component,
    Strategy,
    TwoStageConfig,
)
from .errors import ContractViolation
from .matrix import roulette_wheel


logger = logging.getLogger(__name__)

Number = Union[int, float]
TracePoint = Tuple[float, Number]


class Problem(Protocol):
    name: str

    def objective(self, solution: Any) -> Number:
        ...

    def is_feasible(self, solution: Any) -> bool:
        ...

    def random_solution(self, rng: np.random.Generator) -> Any:
        ...


@dataclass(frozen=True)
class TransitionCounts:
    """Observed transitions of one executed configuration, indexed ``[from][to]``."""

    succ: Tuple[Tuple[int, ...], ...]
    fail: Tuple[Tuple[int, ...], ...]

    @classmethod
    def empty(cls, size: int) -> "TransitionCounts":
        zeros = tuple(tuple(0 for _ in range(size)) for _ in range(size))
        return cls(zeros, zeros)

    @property
    def total(self) -> int:
        return sum(map(sum, self.succ)) + sum(map(sum, self.fail))


@dataclass(frozen=True)
class RunResult:
    best_solution: Any
    best_objective: Number
    trace: Tuple[TracePoint, ...]
    iterations_executed: int
    transitions: Tuple[TransitionCounts, ...] = ()
    history: Optional[Tuple[int, ...]] = None


@dataclass
class EngineState:
    current: Any
    best: Any
    best_obj: Number
    prev_obj: Number
    cur_obj: Number
    active: int = 0
    vnd_applied: bool = False
    polished_best: Any = None
    polished_obj: Number = math.inf

    @classmethod
    def start(cls, solution: Any, objective: Number) -> "EngineState":
        return cls(
            current=solution,
            best=solution,
            best_obj=objective,
            prev_obj=objective,
            cur_obj=objective,
        )


class Clock:
    """Budget accounting in milliseconds or component applications."""

    def __init__(self, budget: Budget) -> None:
        self.budget = budget
        self.applications = 0
        self._start = time.perf_counter()

    def tick(self) -> None:
        self.applications += 1

    def elapsed(self) -> float:
        if self.budget.is_iterations:
            return float(self.applications)
        return (time.perf_counter() - self._start) * 1000.0

    def expired(self) -> bool:
        return self.elapsed() >= self.budget.limit


class _Recorder:
    def __init__(self, record_history: bool) -> None:
        self.trace: List[TracePoint] = []
        self.transitions: List[Tuple[List[List[int]], List[List[int]]]] = []
        self.history: Optional[List[int]] = [] if record_history else None
        self.offset = 0.0
        self.applications = 0

    def improve(self, stamp: float, objective: Number) -> None:
        if not self.trace or objective < self.trace[-1][1]:
            self.trace.append((self.offset + stamp, objective))

    def new_phase(self, size: int) -> Tuple[List[List[int]], List[List[int]]]:
        counts = ([[0] * size for _ in range(size)], [[0] * size for _ in range(size)])
        self.transitions.append(counts)
        return counts

    def result(self, solution: Any, objective: Number) -> RunResult:
        return RunResult(
            best_solution=solution,
            best_objective=objective,
            trace=tuple(self.trace),
            iterations_executed=self.applications,
            transitions=tuple(
                TransitionCounts(
                    tuple(map(tuple, succ)), tuple(map(tuple, fail))  # type: ignore
                )
                for succ, fail in self.transitions
            ),
            history=None if self.history is None else tuple(self.history),
        )


StepHook = Callable[[EngineState, Clock], None]


def _chain(
    config: CmcsConfig,
    problem: Problem,
    state: EngineState,
    clock: Clock,
    rng: np.random.Generator,
    recorder: _Recorder,
    after_step: Optional[StepHook] = None,
) -> None:
    components = config.components
    succ_counts, fail_counts = recorder.new_phase(config.size)
    state.active = 0
    while not clock.expired():
        source = state.active
        state.current = components[source].apply(state.current, problem, rng)
        clock.tick()
        state.cur_obj = problem.objective(state.current)
        if recorder.history is not None:
            recorder.history.append(source)

        if state.cur_obj < state.prev_obj:
            state.active = roulette_wheel(config.m_succ.row(source), rng)
            succ_counts[source][state.active] += 1
            if state.cur_obj < state.best_obj:
                state.best = state.current
                state.best_obj = state.cur_obj
                state.vnd_applied = False
                recorder.improve(clock.elapsed(), state.best_obj)
        else:
            state.active = roulette_wheel(config.m_fail.row(source), rng)
            fail_counts[source][state.active] += 1

        if after_step is not None:
            after_step(state, clock)
        state.prev_obj = state.cur_obj


def _vnd(
    hill_climbers: Sequence[Component],
    solution: Any,
    objective: Number,
    problem: Problem,
    clock: Clock,
    rng: np.random.Generator,
    recorder: Optional[_Recorder] = None,
) -> Tuple[Any, Number]:
    index = 0
    while not clock.expired():
        candidate = hill_climbers[index].apply(solution, problem, rng)
        clock.tick()
        candidate_obj = problem.objective(candidate)
        if candidate_obj < objective:
            solution, objective = candidate, candidate_obj
            index = 0
            if recorder is not None:
                recorder.improve(clock.elapsed(), objective)
        elif index == len(hill_climbers) - 1:
            break
        else:
            index += 1
    return solution, objective


def _check_start(problem: Problem, solution: Any) -> Number:
    if not problem.is_feasible(solution):
        raise ContractViolation(f"initial solution is infeasible for {problem.name}")
    return problem.objective(solution)


def _check_vnd(hill_climbers: Sequence[Component]) -> None:
    if not hill_climbers:
        raise ContractViolation("VND needs at least one hill climber")
    for component in hill_climbers:
        if not component.is_hill_climber:
            raise ContractViolation(f"{component.name} is not a hill climber")


def run_strategy_a(
    config: CmcsConfig,
    problem: Problem,
    s0: Any,
    budget: Budget,
    rng: np.random.Generator,
    *,
    record_history: bool = False,
) -> RunResult:
    """Run the plain Markov chain of components and return the best solution seen."""
    config.validate()
    f0 = _check_start(problem, s0)
    recorder = _Recorder(record_history)
    recorder.improve(0.0, f0)

    clock = Clock(budget)
    state = EngineState.start(s0, f0)
    _chain(config, problem, state, clock, rng, recorder)
    recorder.applications = clock.applications

    logger.debug(
        "strategy A on %s: best=%s after %d applications",
        problem.name,
        state.best_obj,
        clock.applications,
    )
    return recorder.result(state.best, state.best_obj)


def run_vnd(
    hill_climbers: Sequence[Component],
    s: Any,
    problem: Problem,
    budget: Budget,
    rng: np.random.Generator,
) -> Any:
    """
    Variable neighbourhood descent over an ordered list of hill climbers.

    Climber ``i`` is applied until it fails, then ``i + 1``; any improvement
    restarts from the first climber. Stops when every climber fails in turn
    or the budget runs out.
    """
    _check_vnd(hill_climbers)
    objective = _check_start(problem, s)
    solution, _ = _vnd(hill_climbers, s, objective, problem, Clock(budget), rng)
    return solution


def run_strategy_b(
    config: CmcsConfig,
    vnd_list: Sequence[Component],
    problem: Problem,
    s0: Any,
    budget: Budget,
    rng: np.random.Generator,
    *,
    vnd_threshold: float = 0.5,
    faithful_b: bool = False,
    record_history: bool = False,
) -> RunResult:
    """
    Strategy A plus a VND polish of every new best solution found after
    ``vnd_threshold`` of the budget has elapsed.

    The polished solutions are kept apart from the chain. With
    ``faithful_b`` the last polished solution is returned (the chain's best
    only when VND never ran); otherwise the better of the two.
    """
    config.validate()
    _check_vnd(vnd_list)
    f0 = _check_start(problem, s0)
    recorder = _Recorder(record_history)
    recorder.improve(0.0, f0)

    threshold = vnd_threshold * budget.limit

    def polish(state: EngineState, clock: Clock) -> None:
        if state.vnd_applied or clock.expired() or clock.elapsed() < threshold:
            return
        logger.debug(
            "VND fires on %s at %.1f (best=%s)",
            problem.name,
            clock.elapsed(),
            state.best_obj,
        )
        polished, polished_obj = _vnd(
            vnd_list, state.best, state.best_obj, problem, clock, rng, recorder
        )
        if polished_obj < state.polished_obj:
            state.polished_best = polished
            state.polished_obj = polished_obj
        state.vnd_applied = True

    clock = Clock(budget)
    state = EngineState.start(s0, f0)
    _chain(config, problem, state, clock, rng, recorder, after_step=polish)
    recorder.applications = clock.applications

    if state.polished_best is None:
        solution, objective = state.best, state.best_obj
    elif faithful_b or state.polished_obj < state.best_obj:
        solution, objective = state.polished_best, state.polished_obj
    else:
        solution, objective = state.best, state.best_obj
    return recorder.result(solution, objective)


def run_strategy_c(
    cfg: TwoStageConfig,
    problem: Problem,
    s0: Any,
    budget: Budget,
    rng: np.random.Generator,
    *,
    record_history: bool = False,
) -> RunResult:
    """Run ``cfg.sub1`` for ``split`` of the budget, then ``cfg.sub2`` from its best."""
    cfg.validate()
    f0 = _check_start(problem, s0)
    recorder = _Recorder(record_history)
    recorder.improve(0.0, f0)

    first = budget.part(cfg.split)
    rest = budget.limit - first
    best, best_obj = s0, f0

    for stage, (sub, limit) in enumerate(((cfg.sub1, first), (cfg.sub2, rest))):
        if limit <= 0:
            # Entry i always holds the counts of stage i + 1.
            if stage == 0:
                recorder.new_phase(sub.size)
            continue
        phase = Budget(budget.mode, int(limit) if budget.is_iterations else limit)
        clock = Clock(phase)
        state = EngineState.start(best, best_obj)
        _chain(sub, problem, state, clock, rng, recorder)
        recorder.offset += clock.elapsed()
        recorder.applications += clock.applications
        best, best_obj = state.best, state.best_obj

    return recorder.result(best, best_obj)


def run_strategy(
    strategy: Strategy,
    config: AnyConfig,
    problem: Problem,
    s0: Any,
    budget: Budget,
    rng: np.random.Generator,
    *,
    vnd_list: Sequence[Component] = (),
    vnd_threshold: float = 0.5,
    faithful_b: bool = False,
    record_history: bool = False,
) -> RunResult:
    if strategy is Strategy.C:
        if not isinstance(config, TwoStageConfig):
            raise ContractViolation("strategy C needs a two-stage configuration")
        return run_strategy_c(
            config, problem, s0, budget, rng, record_history=record_history
        )
    if not isinstance(config, CmcsConfig):
        raise ContractViolation(
            f"strategy {strategy.value} needs a single configuration"
        )
    if strategy is Strategy.B:
        return run_strategy_b(
            config,
            vnd_list,
            problem,
            s0,
            budget,
            rng,
            vnd_threshold=vnd_threshold,
            faithful_b=faithful_b,
            record_history=record_history,
        )
    return run_strategy_a(
        config, problem, s0, budget, rng, record_history=record_history
    )
