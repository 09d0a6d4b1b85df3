import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np

from ..errors import ContractViolation, InstanceFormatError
from .solution import Ap3Solution, random_solution


MAGIC = "AP3"
COMMENT = "#"

WEIGHT_LOW = 1
WEIGHT_HIGH = 100


class Family(enum.Enum):
    RANDOM = "random"
    CLIQUE = "clique"
    SQUARE_ROOT = "sqrt"
    EXTERNAL = "external"


@dataclass
class InstanceHeader:
    n: int
    family: Family
    seed: int

    def dump_header(self) -> str:
        return f"{MAGIC} {self.n} {self.family.value} {self.seed}"

    @staticmethod
    def load_header(line: str) -> "InstanceHeader":
        parts = line.split()
        if len(parts) != 4 or parts[0] != MAGIC:
            raise InstanceFormatError(f"invalid instance header: {line.strip()!r}")
        try:
            n = int(parts[1])
            family = Family(parts[2])
            seed = int(parts[3])
        except ValueError as e:
            raise InstanceFormatError(
                f"invalid instance header: {line.strip()!r}"
            ) from e
        if n < 1:
            raise InstanceFormatError(f"instance size must be positive, got {n}")
        return InstanceHeader(n=n, family=family, seed=seed)


@dataclass(eq=False)
class Ap3Instance:
    """
    Three-index assignment instance.

    :param costs: ``n x n x n`` tensor, ``costs[i, j, k]`` is ``c(i, j, k)``.
      Integer (int64) for the generated families; float64 only for
      double-precision SquareRoot instances.
    :param family: generator family, or ``EXTERNAL`` for imported data.
    :param seed: generator seed, recorded for provenance.
    :param name: identifier used in baselines and result records.
    """

    costs: np.ndarray
    family: Family = Family.EXTERNAL
    seed: int = 0
    name: str = "ap3"

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs)
        if costs.ndim != 3 or not costs.shape[0] == costs.shape[1] == costs.shape[2]:
            raise ContractViolation(f"cost tensor must be n x n x n, got {costs.shape}")
        if costs.shape[0] < 1:
            raise ContractViolation("cost tensor must not be empty")
        if not np.issubdtype(costs.dtype, np.floating):
            costs = costs.astype(np.int64)
        costs.setflags(write=False)
        self.costs = costs
        self._rows = np.arange(costs.shape[0])

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    @property
    def is_integral(self) -> bool:
        return not np.issubdtype(self.costs.dtype, np.floating)

    @property
    def header(self) -> InstanceHeader:
        return InstanceHeader(n=self.n, family=self.family, seed=self.seed)

    def position_costs(self, solution: Ap3Solution) -> np.ndarray:
        return self.costs[self._rows, solution.j, solution.k]

    def objective(self, solution: Ap3Solution) -> Union[int, float]:
        if not self.is_feasible(solution):
            raise ContractViolation(
                f"infeasible solution for {self.name}: {solution!r}"
            )
        return self._value(self.position_costs(solution).sum())

    def _value(self, total: Any) -> Union[int, float]:
        return int(total) if self.is_integral else float(total)

    def is_feasible(self, solution: Ap3Solution) -> bool:
        return solution.n == self.n and solution.is_feasible()

    def random_solution(self, rng: np.random.Generator) -> Ap3Solution:
        return random_solution(self.n, rng)

    def dumps(self) -> str:
        blocks = []
        for i in range(self.n):
            rows = (" ".join(_format_cost(v) for v in row) for row in self.costs[i])
            blocks.append("\n".join(rows))
        return self.header.dump_header() + "\n" + "\n\n".join(blocks) + "\n"

    @classmethod
    def loads(cls, text: str, name: str = "ap3") -> "Ap3Instance":
        lines = [
            line for line in text.splitlines() if not line.lstrip().startswith(COMMENT)
        ]
        while lines and not lines[0].strip():
            lines.pop(0)
        if not lines:
            raise InstanceFormatError("empty instance file")
        header = InstanceHeader.load_header(lines[0])
        n = header.n

        rows: List[List[str]] = [line.split() for line in lines[1:] if line.strip()]
        if len(rows) != n * n:
            raise InstanceFormatError(f"expected {n * n} cost rows, found {len(rows)}")
        if any(len(row) != n for row in rows):
            raise InstanceFormatError(f"every cost row must have {n} values")
        tokens = [token for row in rows for token in row]
        try:
            if any(("." in t or "e" in t.lower()) for t in tokens):
                values = np.array([float(t) for t in tokens], dtype=np.float64)
            else:
                values = np.array([int(t) for t in tokens], dtype=np.int64)
        except ValueError as e:
            raise InstanceFormatError(f"non-numeric cost in {name}") from e
        return cls(values.reshape(n, n, n), header.family, header.seed, name)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path: Union[str, Path], name: Optional[str] = None) -> "Ap3Instance":
        path = Path(path)
        return cls.loads(path.read_text(encoding="utf-8"), name or path.stem)


def _format_cost(value: Any) -> str:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(int(value))


def generate_instance(
    family: Family,
    n: int,
    seed: int,
    *,
    name: Optional[str] = None,
    sqrt_exact: bool = False,
) -> Ap3Instance:
    """
    Generate an instance of one of the three benchmark families.

    Random costs are drawn from ``1..100``. Clique and SquareRoot costs are
    built from a complete tripartite graph with edge weights in ``1..100``:
    the sum of the three edge weights of triangle ``(i, j, k)``, or the
    square root of the sum of their squares, rounded to the nearest integer
    unless ``sqrt_exact`` is set.
    """
    if n < 1:
        raise ContractViolation(f"problem size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    name = name or f"{family.value}-{n}-{seed}"

    if family is Family.RANDOM:
        costs = rng.integers(
            WEIGHT_LOW, WEIGHT_HIGH + 1, size=(n, n, n), dtype=np.int64
        )
        return Ap3Instance(costs, family, seed, name)
    if family not in (Family.CLIQUE, Family.SQUARE_ROOT):
        raise ContractViolation(f"cannot generate {family.value} instances")

    w_ij, w_jk, w_ik = (
        rng.integers(WEIGHT_LOW, WEIGHT_HIGH + 1, size=(n, n), dtype=np.int64)
        for _ in range(3)
    )
    a = w_ij[:, :, None]
    b = w_jk[None, :, :]
    c = w_ik[:, None, :]
    if family is Family.CLIQUE:
        costs = a + b + c
    else:
        roots = np.sqrt((a * a + b * b + c * c).astype(np.float64))
        costs = roots if sqrt_exact else np.rint(roots).astype(np.int64)
    return Ap3Instance(costs, family, seed, name)
