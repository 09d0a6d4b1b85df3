import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Tuple, Union

from .errors import ContractViolation
from .matrix import TransitionMatrix


class ComponentKind(enum.Enum):
    MUTATION = "mutation"
    HILL_CLIMBER = "hill-climber"


ApplyFunc = Callable[[Any, Any, Any], Any]


@dataclass(frozen=True)
class Component:
    """
    A black-box solution transformer.

    :param name: identifier used in configuration files.
    :param kind: mutation or hill climber. Hill climbers must never return a
      solution worse than their input.
    :param apply: ``apply(solution, problem, rng)`` returning the transformed
      solution. Components never modify their input in place.
    """

    name: str
    kind: ComponentKind
    apply: ApplyFunc = field(compare=False, repr=False)

    @property
    def is_hill_climber(self) -> bool:
        return self.kind is ComponentKind.HILL_CLIMBER


class Strategy(enum.Enum):
    A = "A"
    B = "B"
    C = "C"


class BudgetMode(enum.Enum):
    WALL_CLOCK = "ms"
    ITERATIONS = "iterations"


@dataclass(frozen=True)
class Budget:
    mode: BudgetMode
    limit: float

    def __post_init__(self) -> None:
        if not self.limit > 0:
            raise ContractViolation(f"budget limit must be positive, got {self.limit}")
        if self.mode is BudgetMode.ITERATIONS and self.limit != int(self.limit):
            raise ContractViolation(f"iteration budget must be whole, got {self.limit}")

    @classmethod
    def ms(cls, limit: float) -> "Budget":
        return cls(BudgetMode.WALL_CLOCK, float(limit))

    @classmethod
    def iterations(cls, limit: int) -> "Budget":
        return cls(BudgetMode.ITERATIONS, int(limit))

    @property
    def is_iterations(self) -> bool:
        return self.mode is BudgetMode.ITERATIONS

    def part(self, fraction: float) -> float:
        """The share of the limit given to a phase; whole numbers in iteration mode."""
        if self.is_iterations:
            share = int(math.floor(fraction * self.limit + 0.5))
            return float(min(int(self.limit), share))
        return fraction * self.limit

    def scaled(self, fraction: float) -> "Budget":
        limit = self.part(fraction)
        if self.is_iterations:
            limit = max(1.0, limit)
        return Budget(self.mode, int(limit) if self.is_iterations else limit)


@dataclass(frozen=True)
class CmcsConfig:
    components: Tuple[Component, ...]
    m_succ: TransitionMatrix
    m_fail: TransitionMatrix

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        size = len(self.components)
        if size == 0:
            raise ContractViolation("configuration has no components")
        if self.m_succ.size != size or self.m_fail.size != size:
            raise ContractViolation(
                f"matrix sizes ({self.m_succ.size}, {self.m_fail.size}) "
                f"do not match {size} components"
            )
        names = self.names
        if len(set(names)) != len(names):
            raise ContractViolation(f"duplicate components in configuration: {names}")

    @property
    def is_meaningful(self) -> bool:
        return is_meaningful(self.components)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(component.name for component in self.components)

    @property
    def size(self) -> int:
        return len(self.components)

    def with_matrices(
        self, m_succ: TransitionMatrix, m_fail: TransitionMatrix
    ) -> "CmcsConfig":
        return CmcsConfig(self.components, m_succ, m_fail)


@dataclass(frozen=True)
class TwoStageConfig:
    sub1: CmcsConfig
    sub2: CmcsConfig
    split: float = 0.8

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not 0 < self.split <= 1:
            raise ContractViolation(f"split must be in (0, 1], got {self.split}")
        self.sub1.validate()
        self.sub2.validate()


AnyConfig = Union[CmcsConfig, TwoStageConfig]


def is_meaningful(components: Sequence[Component]) -> bool:
    kinds = {component.kind for component in components}
    return ComponentKind.MUTATION in kinds and ComponentKind.HILL_CLIMBER in kinds
