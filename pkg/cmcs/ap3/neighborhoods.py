"""AP3 neighbourhoods, mutations and hill climbers.

Swap moves are scanned in a fixed order: dimension 1, 2, 3, then positions
``(p, q)`` with ``p < q`` in lexicographic order. Move gains for a whole
dimension are computed at once from the cost tensor, so a full Swap scan is
three ``n x n`` gathers rather than ``3 n (n - 1) / 2`` objective calls.

None of the functions here modify their input solution.
"""
import functools
from itertools import permutations
from typing import Iterator, List, Tuple

import numpy as np

from ..errors import ContractViolation
from .instance import Ap3Instance
from .lap import solve_lap
from .solution import DIM_I, DIM_J, DIM_K, DIMENSIONS, Ap3Solution


SwapMove = Tuple[int, int, int]

# The five non-identity orders of three values.
SHUFFLE_ORDERS = tuple(order for order in permutations(range(3)) if order != (0, 1, 2))


def swap_neighborhood(s: Ap3Solution) -> Iterator[Tuple[int, int, int, Ap3Solution]]:
    """Yield ``(dimension, p, q, neighbour)`` for every Swap move in scan order."""
    n = s.n
    for dimension in DIMENSIONS:
        for p in range(n):
            for q in range(p + 1, n):
                yield dimension, p, q, s.swapped(dimension, p, q)


@functools.lru_cache(maxsize=64)
def _pair_index(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def swap_deltas(inst: Ap3Instance, s: Ap3Solution) -> Tuple[np.ndarray, List[SwapMove]]:
    """
    Objective change of every Swap move, in scan order.

    :returns: ``(deltas, moves)`` where ``deltas[t]`` is the change caused by
      ``moves[t] == (dimension, p, q)``.
    """
    n = s.n
    rows = np.arange(n)
    costs = inst.costs
    j, k = s.j, s.k
    current = costs[rows, j, k]
    base = current[:, None] + current[None, :]

    # moved[p, q]: cost of position p after taking the dimension value of q.
    moved = {
        DIM_I: costs[rows[:, None], j[None, :], k[None, :]],
        DIM_J: costs[rows[:, None], j[None, :], k[:, None]],
        DIM_K: costs[rows[:, None], j[:, None], k[None, :]],
    }
    ps, qs = _pair_index(n)
    deltas = np.concatenate(
        [(moved[d] + moved[d].T - base)[ps, qs] for d in DIMENSIONS]
    )
    moves = [(d, int(p), int(q)) for d in DIMENSIONS for p, q in zip(ps, qs)]
    return deltas, moves


def _require_size(s: Ap3Solution, minimum: int, name: str) -> None:
    if s.n < minimum:
        raise ContractViolation(f"{name} needs n >= {minimum}, got n = {s.n}")


def _apply(s: Ap3Solution, move: SwapMove) -> Ap3Solution:
    dimension, p, q = move
    return s.swapped(dimension, p, q)


def random_swap(s: Ap3Solution, rng: np.random.Generator) -> Ap3Solution:
    _require_size(s, 2, "random swap")
    dimension = int(rng.integers(1, 4))
    p, q = sorted(int(x) for x in rng.choice(s.n, size=2, replace=False))
    return s.swapped(dimension, p, q)


def shuffle_three(s: Ap3Solution, rng: np.random.Generator) -> Ap3Solution:
    _require_size(s, 3, "shuffle three")
    dimension = int(rng.integers(1, 4))
    positions = [int(x) for x in rng.choice(s.n, size=3, replace=False)]
    order = SHUFFLE_ORDERS[int(rng.integers(len(SHUFFLE_ORDERS)))]
    return s.rearranged(dimension, positions, order)


def worst_swap(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    _require_size(s, 2, "worst swap")
    deltas, moves = swap_deltas(inst, s)
    best = int(np.argmax(deltas))
    if deltas[best] <= 0:
        return s
    return _apply(s, moves[best])


def first_worsen(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    _require_size(s, 2, "first worsen")
    deltas, moves = swap_deltas(inst, s)
    worse = np.flatnonzero(deltas > 0)
    if len(worse) == 0:
        return s
    return _apply(s, moves[int(worse[0])])


def first_swap(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    if s.n < 2:
        return s
    deltas, moves = swap_deltas(inst, s)
    better = np.flatnonzero(deltas < 0)
    if len(better) == 0:
        return s
    return _apply(s, moves[int(better[0])])


def best_swap(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    if s.n < 2:
        return s
    deltas, moves = swap_deltas(inst, s)
    best = int(np.argmin(deltas))
    if deltas[best] >= 0:
        return s
    return _apply(s, moves[best])


def hungarian_matrix(inst: Ap3Instance, s: Ap3Solution, d: int) -> np.ndarray:
    """
    Cost of giving dimension-``d`` value ``a`` to the residual pair at position ``b``.

    The residual pair is ``(j, k)`` for ``d = 1``, ``(i, k)`` for ``d = 2`` and
    ``(i, j)`` for ``d = 3``; columns enumerate positions in ``i`` order.
    """
    rows = np.arange(s.n)
    if d == DIM_I:
        return inst.costs[:, s.j, s.k]
    if d == DIM_J:
        return inst.costs[rows, :, s.k].T
    if d == DIM_K:
        return inst.costs[rows, s.j, :].T
    raise ContractViolation(f"dimension must be 1, 2 or 3, got {d}")


def hungarian_d(inst: Ap3Instance, s: Ap3Solution, d: int) -> Ap3Solution:
    """Best solution reachable by permuting the values of dimension ``d``."""
    matrix = hungarian_matrix(inst, s, d)
    permutation, cost = solve_lap(matrix)
    if not cost < inst.objective(s):
        return s
    if d == DIM_I:
        return Ap3Solution(s.j[permutation], s.k[permutation])
    values = np.empty(s.n, dtype=np.int64)
    values[permutation] = np.arange(s.n)
    if d == DIM_J:
        return Ap3Solution(values, s.k)
    return Ap3Solution(s.j, values)


def min_dimension_hungarian(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    best, best_obj = s, inst.objective(s)
    for d in DIMENSIONS:
        candidate = hungarian_d(inst, s, d)
        candidate_obj = inst.objective(candidate)
        if candidate_obj < best_obj:
            best, best_obj = candidate, candidate_obj
    return best


def all_dimension_hungarian(inst: Ap3Instance, s: Ap3Solution) -> Ap3Solution:
    objective = inst.objective(s)
    improved = True
    while improved:
        improved = False
        for d in DIMENSIONS:
            candidate = hungarian_d(inst, s, d)
            candidate_obj = inst.objective(candidate)
            if candidate_obj < objective:
                s, objective = candidate, candidate_obj
                improved = True
    return s


def random_dimension_hungarian(
    inst: Ap3Instance, s: Ap3Solution, rng: np.random.Generator
) -> Ap3Solution:
    return hungarian_d(inst, s, int(rng.integers(1, 4)))
