"""Discretised transition matrices.

Every entry is stored as an integer numerator over the common denominator
``size``, so a row ``(1, 2, 0)`` of a 3x3 matrix means probabilities
``(1/3, 2/3, 0)``. Keeping numerators integral makes the row-sum invariant
exact and lets the roulette wheel draw without floating point.
"""
import enum
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import ContractViolation


Row = Tuple[int, ...]


@dataclass(frozen=True)
class TransitionMatrix:
    numerators: Tuple[Row, ...]

    def __post_init__(self) -> None:
        size = len(self.numerators)
        if size == 0:
            raise ContractViolation("transition matrix must have at least one row")
        for index, row in enumerate(self.numerators):
            if len(row) != size:
                raise ContractViolation(
                    f"row {index} has {len(row)} entries, expected {size}"
                )
            if any(value < 0 or value > size for value in row):
                raise ContractViolation(
                    f"row {index} has numerators outside 0..{size}: {row}"
                )
            if sum(row) != size:
                raise ContractViolation(
                    f"row {index} numerators sum to {sum(row)}, expected {size}"
                )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "TransitionMatrix":
        return cls(tuple(tuple(int(value) for value in row) for row in rows))

    @classmethod
    def identity(cls, size: int) -> "TransitionMatrix":
        return cls.from_rows(
            [[size if i == j else 0 for j in range(size)] for i in range(size)]
        )

    @property
    def size(self) -> int:
        return len(self.numerators)

    @property
    def denominator(self) -> int:
        return len(self.numerators)

    def row(self, index: int) -> Row:
        return self.numerators[index]

    def probability(self, source: int, target: int) -> float:
        return self.numerators[source][target] / self.denominator

    def is_deterministic(self) -> bool:
        return all(max(row) == self.size for row in self.numerators)

    def to_lists(self) -> List[List[int]]:
        return [list(row) for row in self.numerators]

    def __iter__(self) -> Iterator[Row]:
        return iter(self.numerators)


def roulette_wheel(row: Sequence[int], rng: np.random.Generator) -> int:
    """Pick a 0-based index with probability ``row[i] / len(row)``.

    ``row`` holds numerators over the denominator ``len(row)``; a single
    integer draw in ``[0, len(row))`` is walked along the cumulative sum, so
    an index with numerator 0 is never returned.
    """
    denominator = len(row)
    if denominator == 0 or sum(row) != denominator:
        raise ContractViolation(f"malformed transition row: {tuple(row)}")
    draw = int(rng.integers(denominator))
    cumulative = 0
    for index, numerator in enumerate(row):
        cumulative += numerator
        if draw < cumulative:
            return index
    raise ContractViolation(f"malformed transition row: {tuple(row)}")


def random_deterministic_matrix(
    size: int, rng: np.random.Generator
) -> TransitionMatrix:
    if size < 1:
        raise ContractViolation(f"matrix size must be positive, got {size}")
    columns = rng.integers(size, size=size)
    rows = [[0] * size for _ in range(size)]
    for index, column in enumerate(columns):
        rows[index][int(column)] = size
    return TransitionMatrix.from_rows(rows)


class MatrixMutation(enum.Enum):
    SWAP_ROWS = "swap-rows"
    SHUFFLE_ROW = "shuffle-row"
    MINIMUM_CHANGE = "minimum-change"
    RUIN_AND_RECREATE = "ruin-and-recreate"
    VOID = "void"


def mutate_matrix(
    matrix: TransitionMatrix, operator: MatrixMutation, rng: np.random.Generator
) -> TransitionMatrix:
    size = matrix.size
    rows = matrix.to_lists()

    if operator is MatrixMutation.VOID:
        return matrix
    elif operator is MatrixMutation.RUIN_AND_RECREATE:
        return random_deterministic_matrix(size, rng)
    elif operator is MatrixMutation.SWAP_ROWS:
        if size < 2:
            return matrix
        first, second = (int(x) for x in rng.choice(size, size=2, replace=False))
        rows[first], rows[second] = rows[second], rows[first]
    elif operator is MatrixMutation.SHUFFLE_ROW:
        if size < 2:
            return matrix
        row = rows[int(rng.integers(size))]
        swaps = int(rng.integers(size + 1))
        for _ in range(swaps):
            a, b = (int(x) for x in rng.choice(size, size=2, replace=False))
            row[a], row[b] = row[b], row[a]
    elif operator is MatrixMutation.MINIMUM_CHANGE:
        if size < 2:
            return matrix
        row = rows[int(rng.integers(size))]
        up, down = (int(x) for x in rng.choice(size, size=2, replace=False))
        return _minimum_change(matrix, rows, row, up, down)
    else:
        raise ContractViolation(f"unknown matrix mutation: {operator!r}")

    return TransitionMatrix.from_rows(rows)


def _minimum_change(
    matrix: TransitionMatrix, rows: List[List[int]], row: List[int], up: int, down: int
) -> TransitionMatrix:
    # One discretisation step moves from ``down`` to ``up``; a blocked step is a no-op.
    if row[up] >= matrix.size or row[down] <= 0:
        return matrix
    row[up] += 1
    row[down] -= 1
    return TransitionMatrix.from_rows(rows)


def minimum_change_at(
    matrix: TransitionMatrix, row_index: int, up: int, down: int
) -> TransitionMatrix:
    """Apply the minimum-change step at fixed positions."""
    if up == down:
        raise ContractViolation("minimum change needs two distinct positions")
    rows = matrix.to_lists()
    return _minimum_change(matrix, rows, rows[row_index], up, down)
