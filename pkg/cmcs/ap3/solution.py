from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ContractViolation


Permutation = np.ndarray

# Dimension numbers used throughout the AP3 plugin.
DIM_I = 1
DIM_J = 2
DIM_K = 3
DIMENSIONS = (DIM_I, DIM_J, DIM_K)


def _frozen(values: Sequence[int]) -> np.ndarray:
    array = np.array(values, dtype=np.int64)
    array.setflags(write=False)
    return array


@dataclass(init=False, eq=False)
class Ap3Solution:
    """
    Feasible AP3 assignment stored as two arrays indexed by ``i``.

    Position ``i`` holds the triple ``(i, j[i], k[i])``; values are 0-based.
    Arrays are read-only so a solution can be shared between the current
    and best slots of a run without copying.
    """

    j: np.ndarray
    k: np.ndarray

    def __init__(self, j: Sequence[int], k: Sequence[int]) -> None:
        self.j = _frozen(j)
        self.k = _frozen(k)
        if self.j.shape != self.k.shape or self.j.ndim != 1:
            raise ContractViolation(
                "j and k must be equal-length vectors, "
                f"got {self.j.shape} and {self.k.shape}"
            )

    @property
    def n(self) -> int:
        return len(self.j)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Ap3Solution):
            return NotImplemented
        return np.array_equal(self.j, other.j) and np.array_equal(self.k, other.k)

    def __repr__(self) -> str:
        return f"Ap3Solution(j={self.j.tolist()}, k={self.k.tolist()})"

    def is_feasible(self) -> bool:
        identity = np.arange(self.n)
        return np.array_equal(np.sort(self.j), identity) and np.array_equal(
            np.sort(self.k), identity
        )

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.j.tolist(), self.k.tolist()))

    def triples(self) -> List[Tuple[int, int, int]]:
        return [(i, j, k) for i, (j, k) in enumerate(self.pairs())]

    def swapped(self, dimension: int, p: int, q: int) -> "Ap3Solution":
        """
        Exchange the values of two positions in one dimension.

        Exchanging two ``i`` labels is the same as exchanging the ``(j, k)``
        tuples stored at positions ``p`` and ``q``.
        """
        j = self.j.copy()
        k = self.k.copy()
        if dimension in (DIM_I, DIM_J):
            j[p], j[q] = j[q], j[p]
        if dimension in (DIM_I, DIM_K):
            k[p], k[q] = k[q], k[p]
        if dimension not in DIMENSIONS:
            raise ContractViolation(f"dimension must be 1, 2 or 3, got {dimension}")
        return Ap3Solution(j, k)

    def rearranged(
        self, dimension: int, positions: Sequence[int], order: Sequence[int]
    ) -> "Ap3Solution":
        """Move the values at ``positions[order[t]]`` to ``positions[t]``."""
        source = [positions[index] for index in order]
        j = self.j.copy()
        k = self.k.copy()
        if dimension in (DIM_I, DIM_J):
            j[list(positions)] = self.j[source]
        if dimension in (DIM_I, DIM_K):
            k[list(positions)] = self.k[source]
        if dimension not in DIMENSIONS:
            raise ContractViolation(f"dimension must be 1, 2 or 3, got {dimension}")
        return Ap3Solution(j, k)

    def to_dict(self) -> Dict[str, List[int]]:
        return {"j": self.j.tolist(), "k": self.k.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[int]]) -> "Ap3Solution":
        return cls(data["j"], data["k"])

    @classmethod
    def identity(cls, n: int) -> "Ap3Solution":
        return cls(np.arange(n), np.arange(n))


def random_solution(n: int, rng: np.random.Generator) -> Ap3Solution:
    if n < 1:
        raise ContractViolation(f"problem size must be positive, got {n}")
    return Ap3Solution(rng.permutation(n), rng.permutation(n))
