"""Linear assignment by the Hungarian method with row/column potentials.

Rows are added one at a time; each addition grows a shortest augmenting
path over the reduced costs ``cost[i, j] - u[i] - v[j]``, which keeps the
whole solve at O(n^3). The inner column scan is vectorised with numpy.
"""
from typing import Tuple, Union

import numpy as np

from ..errors import ContractViolation
from .solution import Permutation


def solve_lap(cost_matrix: np.ndarray) -> Tuple[Permutation, Union[int, float]]:
    """
    Minimum-cost perfect matching of rows to columns.

    :returns: ``(permutation, cost)`` where ``permutation[row]`` is the
      column assigned to ``row``. Ties are resolved towards lower column
      indices. The cost is an ``int`` for integer input.
    """
    cost = np.asarray(cost_matrix)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ContractViolation(f"cost matrix must be square, got shape {cost.shape}")
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0

    work = cost.astype(np.float64)
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # owner[col] is the 1-based row matched to column col; column 0 is the virtual root.
    owner = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for row in range(1, n + 1):
        owner[0] = row
        col0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[col0] = True
            row0 = owner[col0]
            free = ~used[1:]
            reduced = work[row0 - 1] - u[row0] - v[1:]

            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = col0

            candidates = np.where(free, minv[1:], np.inf)
            col1 = int(np.argmin(candidates)) + 1
            delta = candidates[col1 - 1]

            u[owner[used]] += delta
            v[used] -= delta
            minv[~used] -= delta

            col0 = col1
            if owner[col0] == 0:
                break

        while col0:
            col1 = way[col0]
            owner[col0] = owner[col1]
            col0 = col1

    permutation = np.empty(n, dtype=np.int64)
    permutation[owner[1:] - 1] = np.arange(n)
    total = cost[np.arange(n), permutation].sum()
    if np.issubdtype(cost.dtype, np.floating):
        return permutation, float(total)
    return permutation, int(total)
