from functools import partial
from typing import Dict, Iterable, List, Tuple

from numpy.random import Generator

from ..config import CmcsConfig, Component, ComponentKind
from ..errors import ContractViolation
from ..matrix import TransitionMatrix
from . import neighborhoods as nb
from .instance import Ap3Instance
from .solution import Ap3Solution


MUTATION = ComponentKind.MUTATION
HILL_CLIMBER = ComponentKind.HILL_CLIMBER


def _stochastic(func, s: Ap3Solution, inst: Ap3Instance, rng: Generator):
    return func(s, rng)


def _deterministic(func, s: Ap3Solution, inst: Ap3Instance, rng: Generator):
    return func(inst, s)


def _with_rng(func, s: Ap3Solution, inst: Ap3Instance, rng: Generator):
    return func(inst, s, rng)


def _fixed_dimension(d: int, s: Ap3Solution, inst: Ap3Instance, rng: Generator):
    return nb.hungarian_d(inst, s, d)


COMPONENTS: Dict[str, Component] = {
    component.name: component
    for component in (
        Component("random-swap", MUTATION, partial(_stochastic, nb.random_swap)),
        Component("shuffle-three", MUTATION, partial(_stochastic, nb.shuffle_three)),
        Component("worst-swap", MUTATION, partial(_deterministic, nb.worst_swap)),
        Component("first-worsen", MUTATION, partial(_deterministic, nb.first_worsen)),
        Component("first-swap", HILL_CLIMBER, partial(_deterministic, nb.first_swap)),
        Component("best-swap", HILL_CLIMBER, partial(_deterministic, nb.best_swap)),
        Component("hungarian-1", HILL_CLIMBER, partial(_fixed_dimension, 1)),
        Component("hungarian-2", HILL_CLIMBER, partial(_fixed_dimension, 2)),
        Component("hungarian-3", HILL_CLIMBER, partial(_fixed_dimension, 3)),
        Component(
            "min-dimension-hungarian",
            HILL_CLIMBER,
            partial(_deterministic, nb.min_dimension_hungarian),
        ),
        Component(
            "all-dimension-hungarian",
            HILL_CLIMBER,
            partial(_deterministic, nb.all_dimension_hungarian),
        ),
        Component(
            "random-dimension-hungarian",
            HILL_CLIMBER,
            partial(_with_rng, nb.random_dimension_hungarian),
        ),
    )
}

DEFAULT_POOL = (
    "random-swap",
    "shuffle-three",
    "worst-swap",
    "first-worsen",
    "first-swap",
    "best-swap",
    "hungarian-1",
    "min-dimension-hungarian",
    "all-dimension-hungarian",
    "random-dimension-hungarian",
)

DEFAULT_VND = ("best-swap", "all-dimension-hungarian")


def resolve(names: Iterable[str]) -> Tuple[Component, ...]:
    components: List[Component] = []
    for name in names:
        try:
            components.append(COMPONENTS[name])
        except KeyError:
            raise ContractViolation(f"unknown AP3 component: {name!r}") from None
    return tuple(components)


def baseline_config(n: int = 3) -> CmcsConfig:
    """
    Alternate a three-way shuffle with a full Hungarian descent.

    Instances too small to shuffle three positions use a random swap instead;
    a single-row instance has one solution, so the descent runs alone.
    """
    if n < 1:
        raise ContractViolation(f"instance size must be positive, got {n}")
    if n == 1:
        return CmcsConfig(
            resolve(["all-dimension-hungarian"]),
            m_succ=TransitionMatrix.identity(1),
            m_fail=TransitionMatrix.identity(1),
        )
    mutation = "shuffle-three" if n >= 3 else "random-swap"
    return CmcsConfig(
        resolve([mutation, "all-dimension-hungarian"]),
        m_succ=TransitionMatrix.from_rows([[0, 2], [2, 0]]),
        m_fail=TransitionMatrix.from_rows([[0, 2], [2, 0]]),
    )
