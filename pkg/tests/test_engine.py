from itertools import permutations

import numpy as np
import pytest

from cmcs.ap3 import (
    DEFAULT_VND,
    Ap3Solution,
    Family,
    all_dimension_hungarian,
    best_swap,
    generate_instance,
    hungarian_d,
    resolve,
    swap_neighborhood,
)
from cmcs.config import Budget, CmcsConfig, Strategy, TwoStageConfig
from cmcs.engine import (
    TransitionCounts,
    run_strategy,
    run_strategy_a,
    run_strategy_b,
    run_strategy_c,
    run_vnd,
)
from cmcs.errors import ContractViolation
from cmcs.matrix import TransitionMatrix, random_deterministic_matrix


def make_config(names, succ, fail):
    return CmcsConfig(
        resolve(names),
        TransitionMatrix.from_rows(succ),
        TransitionMatrix.from_rows(fail),
    )


@pytest.fixture()
def instance():
    return generate_instance(Family.CLIQUE, 8, seed=1)


@pytest.fixture()
def config():
    return make_config(
        ["random-swap", "shuffle-three", "best-swap"],
        [[1, 1, 1], [0, 0, 3], [2, 1, 0]],
        [[0, 0, 3], [1, 1, 1], [3, 0, 0]],
    )


def random_config(rng):
    names = ["random-swap", "worst-swap", "first-swap", "hungarian-2"]
    # Any three of the four include a mutation.
    chosen = [names[i] for i in sorted(rng.choice(4, size=3, replace=False))]
    return CmcsConfig(
        resolve(chosen),
        random_deterministic_matrix(3, rng),
        random_deterministic_matrix(3, rng),
    )


def reference_chain(config, instance, s0, iterations, rng):
    """Independent interpreter of the component transition chain."""
    s, prev = s0, instance.objective(s0)
    best = prev
    active = 0
    history = []
    for _ in range(iterations):
        history.append(active)
        s = config.components[active].apply(s, instance, rng)
        f = instance.objective(s)
        row = config.m_succ.row(active) if f < prev else config.m_fail.row(active)
        draw = int(rng.integers(len(row)))
        active = int(np.searchsorted(np.cumsum(row), draw, side="right"))
        best = min(best, f)
        prev = f
    return history, best


def brute_force_optimum(instance):
    n = instance.n
    return min(
        instance.objective(Ap3Solution(j, k))
        for j in permutations(range(n))
        for k in permutations(range(n))
    )


def test_strategy_a_follows_markov_chain(instance, config):
    for seed in range(10):
        s0 = instance.random_solution(np.random.default_rng(100 + seed))
        result = run_strategy_a(
            config,
            instance,
            s0,
            Budget.iterations(300),
            np.random.default_rng(seed),
            record_history=True,
        )
        history, best = reference_chain(
            config, instance, s0, 300, np.random.default_rng(seed)
        )
        assert list(result.history) == history
        assert result.best_objective == best
        assert result.iterations_executed == 300


def test_trace_properties(instance, config):
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_a(
        config, instance, s0, Budget.iterations(500), np.random.default_rng(1)
    )
    assert result.trace[0] == (0.0, instance.objective(s0))
    objectives = [objective for _, objective in result.trace]
    stamps = [stamp for stamp, _ in result.trace]
    assert all(a > b for a, b in zip(objectives, objectives[1:]))
    assert stamps == sorted(stamps)
    assert stamps[-1] <= 500
    assert objectives[-1] == result.best_objective
    assert instance.objective(result.best_solution) == result.best_objective


def test_transitions_count_every_application(instance, config):
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_a(
        config, instance, s0, Budget.iterations(250), np.random.default_rng(2)
    )
    assert len(result.transitions) == 1
    counts = result.transitions[0]
    assert counts.total == 250
    # best-swap never moves to itself after a success.
    assert counts.succ[2][2] == 0
    assert counts.fail[0][0] == 0 and counts.fail[0][1] == 0


def test_same_seed_same_result(instance, config):
    s0 = instance.random_solution(np.random.default_rng(5))
    first = run_strategy_a(
        config, instance, s0, Budget.iterations(200), np.random.default_rng(9)
    )
    second = run_strategy_a(
        config, instance, s0, Budget.iterations(200), np.random.default_rng(9)
    )
    assert first == second


def test_infeasible_start(instance, config):
    bad = Ap3Solution([0, 0, 1, 2, 3, 4, 5, 6], list(range(8)))
    with pytest.raises(ContractViolation):
        run_strategy_a(
            config, instance, bad, Budget.iterations(10), np.random.default_rng(0)
        )


def test_wall_clock_budget(instance, config):
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_a(
        config, instance, s0, Budget.ms(30), np.random.default_rng(0)
    )
    assert result.iterations_executed > 0
    assert result.best_objective <= instance.objective(s0)


def test_single_hill_climber_reaches_local_optimum():
    config = make_config(["best-swap"], [[1]], [[1]])
    for seed in range(10):
        instance = generate_instance(Family.RANDOM, 4, seed=seed)
        s0 = instance.random_solution(np.random.default_rng(seed))
        result = run_strategy_a(
            config, instance, s0, Budget.iterations(4**3), np.random.default_rng(0)
        )
        best = result.best_objective
        neighbours = [t for _, _, _, t in swap_neighborhood(result.best_solution)]
        assert len(neighbours) == 3 * 6
        assert all(instance.objective(t) >= best for t in neighbours)


def test_strategy_c_degenerates_to_a():
    rng = np.random.default_rng(20)
    for case in range(20):
        instance = generate_instance(Family.RANDOM, int(rng.integers(3, 8)), seed=case)
        config = random_config(rng)
        s0 = instance.random_solution(rng)
        budget = Budget.iterations(int(rng.integers(20, 200)))
        a = run_strategy_a(config, instance, s0, budget, np.random.default_rng(case))
        c = run_strategy_c(
            TwoStageConfig(config, config, 1.0),
            instance,
            s0,
            budget,
            np.random.default_rng(case),
        )
        assert c == a


def test_strategy_b_without_vnd_degenerates_to_a():
    rng = np.random.default_rng(21)
    vnd = resolve(["best-swap", "all-dimension-hungarian"])
    for case in range(20):
        instance = generate_instance(Family.CLIQUE, int(rng.integers(3, 8)), seed=case)
        config = random_config(rng)
        s0 = instance.random_solution(rng)
        budget = Budget.iterations(int(rng.integers(20, 200)))
        a = run_strategy_a(config, instance, s0, budget, np.random.default_rng(case))
        b = run_strategy_b(
            config,
            vnd,
            instance,
            s0,
            budget,
            np.random.default_rng(case),
            vnd_threshold=1.0,
        )
        assert b == a


def test_strategy_c_splits_budget(instance, config):
    other = make_config(
        ["shuffle-three", "all-dimension-hungarian"], [[0, 2], [2, 0]], [[0, 2], [2, 0]]
    )
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_c(
        TwoStageConfig(config, other, 0.8),
        instance,
        s0,
        Budget.iterations(10),
        np.random.default_rng(3),
    )
    assert result.iterations_executed == 10
    assert [counts.total for counts in result.transitions] == [8, 2]
    assert all(stamp <= 10 for stamp, _ in result.trace)

    half = run_strategy_c(
        TwoStageConfig(config, other, 0.5),
        instance,
        s0,
        Budget.iterations(101),
        np.random.default_rng(3),
    )
    # Round half up.
    assert [counts.total for counts in half.transitions] == [51, 50]


def test_strategy_c_counts_skipped_first_stage(instance, config):
    uniform = [[1, 1], [1, 1]]
    other = make_config(["random-swap", "best-swap"], uniform, uniform)
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_c(
        TwoStageConfig(config, other, 0.1),
        instance,
        s0,
        Budget.iterations(4),
        np.random.default_rng(3),
    )
    assert result.iterations_executed == 4
    assert len(result.transitions) == 2
    assert result.transitions[0] == TransitionCounts.empty(3)
    assert result.transitions[1].total == 4


def test_strategy_c_second_stage_starts_from_first_best(instance, config):
    climber = make_config(["all-dimension-hungarian"], [[1]], [[1]])
    s0 = instance.random_solution(np.random.default_rng(0))
    result = run_strategy_c(
        TwoStageConfig(config, climber, 0.9),
        instance,
        s0,
        Budget.iterations(100),
        np.random.default_rng(3),
    )
    first = run_strategy_a(
        config, instance, s0, Budget.iterations(90), np.random.default_rng(3)
    )
    assert result.best_objective <= first.best_objective
    polished = all_dimension_hungarian(instance, first.best_solution)
    assert result.best_objective == instance.objective(polished)


def test_strategy_b_polishes(instance, config):
    vnd = resolve(["best-swap", "all-dimension-hungarian"])
    s0 = instance.random_solution(np.random.default_rng(0))
    kwargs = dict(vnd_threshold=0.0)
    default = run_strategy_b(
        config,
        vnd,
        instance,
        s0,
        Budget.iterations(300),
        np.random.default_rng(6),
        **kwargs,
    )
    faithful = run_strategy_b(
        config,
        vnd,
        instance,
        s0,
        Budget.iterations(300),
        np.random.default_rng(6),
        faithful_b=True,
        **kwargs,
    )
    assert default.trace == faithful.trace
    assert default.best_objective <= faithful.best_objective
    assert default.iterations_executed <= 300
    assert instance.objective(default.best_solution) == default.best_objective


def test_strategy_b_polished_best_is_vnd_fixpoint():
    vnd = resolve(DEFAULT_VND)
    uniform = [[1, 1], [1, 1]]
    config = make_config(["random-swap", "best-swap"], uniform, uniform)
    for seed in range(5):
        instance = generate_instance(Family.CLIQUE, 5, seed=seed)
        rng = np.random.default_rng(seed)
        result = run_strategy_b(
            config,
            vnd,
            instance,
            instance.random_solution(rng),
            Budget.iterations(5_000),
            rng,
            faithful_b=True,
        )
        polished = result.best_solution
        value = result.best_objective
        assert instance.objective(polished) == value
        for climber in vnd:
            again = climber.apply(polished, instance, rng)
            assert instance.objective(again) == value
        for d in (1, 2, 3):
            assert instance.objective(hungarian_d(instance, polished, d)) == value


def test_run_vnd_fixpoint():
    vnd = resolve(["best-swap", "all-dimension-hungarian"])
    rng = np.random.default_rng(30)
    for case in range(100):
        instance = generate_instance(Family.RANDOM, 10, seed=case)
        s = instance.random_solution(rng)
        result = run_vnd(vnd, s, instance, Budget.iterations(10 ** 6), rng)
        value = instance.objective(result)
        assert value <= instance.objective(s)
        assert instance.objective(best_swap(instance, result)) == value
        assert instance.objective(all_dimension_hungarian(instance, result)) == value


def test_run_vnd_rejects_bad_lists(instance):
    s = instance.random_solution(np.random.default_rng(0))
    rng = np.random.default_rng(0)
    with pytest.raises(ContractViolation):
        run_vnd((), s, instance, Budget.iterations(10), rng)
    with pytest.raises(ContractViolation):
        run_vnd(resolve(["random-swap"]), s, instance, Budget.iterations(10), rng)


def test_run_strategy_dispatch(instance, config):
    s0 = instance.random_solution(np.random.default_rng(0))
    budget = Budget.iterations(20)
    with pytest.raises(ContractViolation):
        run_strategy(Strategy.C, config, instance, s0, budget, np.random.default_rng(0))
    with pytest.raises(ContractViolation):
        run_strategy(
            Strategy.A,
            TwoStageConfig(config, config),
            instance,
            s0,
            budget,
            np.random.default_rng(0),
        )
    with pytest.raises(ContractViolation):
        run_strategy(Strategy.B, config, instance, s0, budget, np.random.default_rng(0))
    a = run_strategy(Strategy.A, config, instance, s0, budget, np.random.default_rng(0))
    assert a == run_strategy_a(config, instance, s0, budget, np.random.default_rng(0))


def test_finds_global_optimum_on_tiny_instances():
    uniform = [[1, 1], [1, 1]]
    config = make_config(["random-swap", "best-swap"], uniform, uniform)
    found = 0
    for case in range(50):
        instance = generate_instance(Family.RANDOM, 3, seed=1000 + case)
        rng = np.random.default_rng(case)
        result = run_strategy_a(
            config,
            instance,
            instance.random_solution(rng),
            Budget.iterations(10_000),
            rng,
        )
        found += result.best_objective == brute_force_optimum(instance)
    assert found >= 49


def test_budget_parts():
    assert Budget.iterations(10).part(0.25) == 3
    assert Budget.iterations(10).part(0.8) == 8
    assert Budget.iterations(10).part(1.0) == 10
    assert Budget.ms(1000).part(0.8) == 800
    assert Budget.iterations(3).scaled(0.1).limit == 1
    with pytest.raises(ContractViolation):
        Budget.iterations(0)
    with pytest.raises(ContractViolation):
        Budget.ms(-5)
