import logging

import numpy as np
import pytest

from cmcs.ap3 import DEFAULT_POOL, DEFAULT_VND, Family, generate_instance, resolve
from cmcs.config import Budget, CmcsConfig, ComponentKind, Strategy, TwoStageConfig
from cmcs.configurator import (
    TRAINING_TAG,
    VALIDATION_TAG,
    ComponentPool,
    Scoring,
    StrategyContext,
    TrainingProtocol,
    configure_single_stage,
    configure_strategy_c,
    count_meaningful_subsets,
    count_pairs,
    draw_operators,
    enumerate_meaningful_subsets,
    evaluate_configuration,
    mutate_configuration,
    optimize_matrices,
    plan_row,
    plan_training_minutes,
)
from cmcs.errors import ContractViolation
from cmcs.matrix import MatrixMutation, TransitionMatrix
from cmcs.pool import WorkerPool


@pytest.fixture()
def training():
    return tuple(
        generate_instance(Family.RANDOM, 5, seed=seed, name=f"train-{seed}")
        for seed in range(2)
    )


@pytest.fixture()
def validation():
    return tuple(
        generate_instance(Family.RANDOM, 5, seed=seed, name=f"valid-{seed}")
        for seed in range(10, 12)
    )


@pytest.fixture()
def protocol(training, validation):
    return TrainingProtocol(
        training=training,
        validation=validation,
        per_run_budget=Budget.iterations(30),
        matrix_search=Budget.iterations(2),
        stage_search=Budget.iterations(2),
        population_size=4,
        children_split=(2, 2),
    )


@pytest.fixture()
def small_pool():
    return ComponentPool(resolve(["random-swap", "first-swap", "hungarian-1"]))


def test_subset_enumeration():
    pool = ComponentPool(resolve(DEFAULT_POOL))
    for size in (2, 3, 4):
        subsets = enumerate_meaningful_subsets(pool, size)
        assert len(subsets) == count_meaningful_subsets(4, 6, size)
        for subset in subsets:
            kinds = {component.kind for component in subset}
            assert kinds == {ComponentKind.MUTATION, ComponentKind.HILL_CLIMBER}
    assert count_meaningful_subsets(4, 6, 2) == 24
    assert count_meaningful_subsets(4, 6, 3) == 96
    first = enumerate_meaningful_subsets(pool, 2)[0]
    assert [c.name for c in first] == ["random-swap", "first-swap"]
    with pytest.raises(ContractViolation):
        enumerate_meaningful_subsets(pool, 1)
    with pytest.raises(ContractViolation):
        enumerate_meaningful_subsets(pool, 11)


def test_pool_needs_both_kinds():
    with pytest.raises(ContractViolation):
        ComponentPool(resolve(["random-swap", "shuffle-three"]))
    with pytest.raises(ContractViolation):
        ComponentPool(resolve(["random-swap", "random-swap", "best-swap"]))


def test_training_planner_arithmetic():
    assert plan_training_minutes(Strategy.A, 12, 4) == 48
    assert plan_training_minutes(Strategy.B, 54, 4) == 216
    assert count_pairs(12, distinct_pairs=True) == 132
    assert count_pairs(54, distinct_pairs=True) == 2862
    assert count_pairs(12) == 144
    assert plan_training_minutes(Strategy.C, 12, 2, distinct_pairs=True) == 792
    assert plan_training_minutes(Strategy.C, 54, 2, distinct_pairs=True) == 17172
    row = plan_row(Strategy.C, 2, 12, 2, distinct_pairs=True)
    assert (row.component_sets, row.minutes) == (132, 792)


def test_mutate_configuration_keeps_components():
    rng = np.random.default_rng(0)
    parent = CmcsConfig(
        resolve(["random-swap", "best-swap", "hungarian-2"]),
        TransitionMatrix.identity(3),
        TransitionMatrix.identity(3),
    )
    void = (MatrixMutation.VOID, MatrixMutation.VOID)
    assert mutate_configuration(parent, rng, void) == parent
    for _ in range(100):
        child = mutate_configuration(parent, rng)
        assert child.components == parent.components
        assert child.m_succ.size == child.m_fail.size == 3
        parent = child


def test_operator_draws_are_independent():
    rng = np.random.default_rng(25)
    children = 50_000
    draws = [draw_operators(rng) for _ in range(children)]
    void = (MatrixMutation.VOID, MatrixMutation.VOID)
    assert abs(draws.count(void) / children - 1 / 25) < 0.005
    for operator in MatrixMutation:
        share = sum(first is operator for first, _ in draws) / children
        assert abs(share - 1 / 5) < 0.01


def test_protocol_validation(training):
    with pytest.raises(ContractViolation):
        TrainingProtocol(training=())
    with pytest.raises(ContractViolation):
        TrainingProtocol(training=training, population_size=10)
    with pytest.raises(ContractViolation):
        TrainingProtocol(training=training, scoring=Scoring.MEAN_RELATIVE_ERROR)
    protocol = TrainingProtocol(training=training)
    assert protocol.selection_set == training
    assert protocol.population_size == 50
    assert protocol.per_run_budget == Budget.ms(1000)


def test_evaluate_configuration(training):
    config = CmcsConfig(
        resolve(["random-swap", "best-swap"]),
        TransitionMatrix.from_rows([[0, 2], [2, 0]]),
        TransitionMatrix.from_rows([[0, 2], [2, 0]]),
    )
    context = StrategyContext(Strategy.A)
    budget = Budget.iterations(40)
    first = evaluate_configuration(config, context, training, budget, (1, 2))
    assert first == evaluate_configuration(config, context, training, budget, (1, 2))

    baseline = {instance.name: 1 for instance in training}
    error = evaluate_configuration(
        config,
        context,
        training,
        budget,
        (1, 2),
        scoring=Scoring.MEAN_RELATIVE_ERROR,
        baseline=baseline,
    )
    assert error == pytest.approx(100.0 * (first - 1))
    with pytest.raises(ContractViolation):
        evaluate_configuration(
            config,
            context,
            training,
            budget,
            (1, 2),
            scoring=Scoring.MEAN_RELATIVE_ERROR,
            baseline={},
        )


def test_optimize_matrices(protocol, small_pool, caplog):
    subset = small_pool.components[:2]
    context = StrategyContext(Strategy.A)
    with caplog.at_level(logging.INFO, logger="cmcs.configurator.training"):
        found = optimize_matrices(subset, context, protocol, (7,), subset_id="s")
    name = "cmcs.configurator.training"
    lines = [r.getMessage() for r in caplog.records if r.name == name]
    assert len(lines) == 2
    assert all(line.split("\t")[0] == "s" for line in lines)
    assert len(found.generations) == 2
    assert found.evaluations == 8
    global_bests = [record.global_best for record in found.generations]
    assert global_bests == sorted(global_bests, reverse=True)
    assert found.score == global_bests[-1]
    assert found.config.components == tuple(subset)

    again = optimize_matrices(subset, context, protocol, (7,), subset_id="s")
    assert again.config == found.config
    assert again.score == found.score


def test_optimize_matrices_keeps_incumbent(protocol, small_pool):
    subset = small_pool.components[:2]
    context = StrategyContext(Strategy.A)
    incumbent = CmcsConfig(
        subset,
        TransitionMatrix.from_rows([[1, 1], [2, 0]]),
        TransitionMatrix.identity(2),
    )
    found = optimize_matrices(subset, context, protocol, (3,), incumbent=incumbent)
    incumbent_score = evaluate_configuration(
        incumbent,
        context,
        protocol.training,
        protocol.per_run_budget,
        (3, TRAINING_TAG, 0),
    )
    assert found.score <= incumbent_score


def test_optimize_matrices_rejects_meaningless_subset(protocol):
    with pytest.raises(ContractViolation):
        optimize_matrices(
            resolve(["first-swap", "best-swap"]),
            StrategyContext(Strategy.A),
            protocol,
            (0,),
        )


def test_toy_pool_population(training):
    protocol = TrainingProtocol(
        training=training[:1],
        per_run_budget=Budget.iterations(5),
        matrix_search=Budget.iterations(3),
    )
    pool = ComponentPool(resolve(["random-swap", "best-swap"]))
    result = configure_single_stage(pool, 2, Strategy.A, protocol, seed=1)
    assert len(result.leaderboard) == 1
    assert len(result.generations) == 3
    assert result.leaderboard[0].evaluations == 150
    assert result.evaluations >= 150


def test_configure_single_stage(protocol, small_pool):
    result = configure_single_stage(small_pool, 2, Strategy.A, protocol, seed=5)
    assert [entry.subset_id for entry in result.leaderboard] == ["A0", "A1"]
    best = min(entry.validation_score for entry in result.leaderboard)
    assert result.best.validation_score == best
    assert result.winner == result.best.config
    assert result.winner.is_meaningful

    again = configure_single_stage(small_pool, 2, Strategy.A, protocol, seed=5)
    assert again.winner == result.winner
    assert again.leaderboard == result.leaderboard


def test_configure_is_independent_of_workers(protocol, small_pool):
    inline = configure_single_stage(small_pool, 2, Strategy.A, protocol, seed=2)
    with WorkerPool(2) as workers:
        parallel = configure_single_stage(
            small_pool, 2, Strategy.A, protocol, seed=2, workers=workers
        )
    assert parallel.winner == inline.winner
    assert parallel.leaderboard == inline.leaderboard


def test_configure_strategy_b(protocol, small_pool):
    with pytest.raises(ContractViolation):
        configure_single_stage(small_pool, 2, Strategy.B, protocol)
    with pytest.raises(ContractViolation):
        configure_single_stage(small_pool, 2, Strategy.C, protocol)
    result = configure_single_stage(
        small_pool, 2, Strategy.B, protocol, vnd=resolve(DEFAULT_VND), seed=1
    )
    assert result.strategy is Strategy.B
    assert len(result.leaderboard) == 2


def test_configure_strategy_c(protocol, small_pool):
    result = configure_strategy_c(small_pool, 2, protocol, seed=4)
    ids = [entry.subset_id for entry in result.leaderboard]
    assert ids == ["C0-0", "C0-1", "C1-0", "C1-1"]
    assert isinstance(result.winner, TwoStageConfig)
    assert result.winner.split == protocol.split
    # Three stages of two generations per pair.
    assert len(result.generations) == 4 * 3 * 2
    entry = result.leaderboard[1]
    assert entry.components == (
        ("random-swap", "first-swap"),
        ("random-swap", "hungarian-1"),
    )

    distinct = configure_strategy_c(
        small_pool, 2, protocol, distinct_pairs=True, seed=4
    )
    assert [entry.subset_id for entry in distinct.leaderboard] == ["C0-1", "C1-0"]


def test_validation_uses_common_start_points(protocol, small_pool):
    result = configure_single_stage(small_pool, 2, Strategy.A, protocol, seed=7)
    for entry in result.leaderboard:
        score = evaluate_configuration(
            entry.config,
            StrategyContext(Strategy.A),
            protocol.validation,
            protocol.per_run_budget,
            (7, VALIDATION_TAG),
        )
        assert entry.validation_score == score
