"""Solution error over time, averaged across instances and repeats."""
import csv
from dataclasses import dataclass
from typing import IO, List, Sequence, Tuple

import numpy as np

from .config import Budget
from .engine import Number, TracePoint
from .errors import ContractViolation


GRID_POINTS = 20
GRID_START_S = 0.01


@dataclass(frozen=True)
class TimeGrid:
    """Curve sample points: seconds for wall-clock budgets, applications otherwise."""

    points: Tuple[float, ...]
    iterations: bool = False

    @property
    def label(self) -> str:
        return "iterations" if self.iterations else "time_s"

    def stamp(self, point: float) -> float:
        # Trace stamps are milliseconds in wall-clock mode.
        return point if self.iterations else point * 1000.0


def log_grid(budget: Budget, points: int = GRID_POINTS) -> TimeGrid:
    if points < 1:
        raise ContractViolation(f"grid needs at least one point, got {points}")
    if budget.is_iterations:
        stop = float(budget.limit)
        values = np.unique(np.rint(np.geomspace(1.0, stop, points)))
        return TimeGrid(tuple(float(v) for v in values), iterations=True)
    stop = budget.limit / 1000.0
    if stop <= GRID_START_S or points == 1:
        return TimeGrid((stop,))
    return TimeGrid(tuple(float(v) for v in np.geomspace(GRID_START_S, stop, points)))


def resample(trace: Sequence[TracePoint], grid: TimeGrid) -> List[Number]:
    """Best objective recorded at or before each grid point."""
    if not trace:
        raise ContractViolation("cannot resample an empty trace")
    stamps = np.array([stamp for stamp, _ in trace], dtype=np.float64)
    values = []
    for point in grid.points:
        index = int(np.searchsorted(stamps, grid.stamp(point), side="right")) - 1
        values.append(trace[max(index, 0)][1])
    return values


def relative_error(value: Number, reference: Number) -> float:
    if not reference > 0:
        raise ContractViolation(f"reference objective must be positive: {reference}")
    return 100.0 * (value - reference) / reference


@dataclass(frozen=True)
class ErrorCurve:
    label: str
    grid: TimeGrid
    errors: Tuple[float, ...]

    @property
    def final_error(self) -> float:
        return self.errors[-1]


def error_curve(
    label: str,
    runs: Sequence[Tuple[Sequence[TracePoint], Number]],
    grid: TimeGrid,
) -> ErrorCurve:
    """
    Average the error of several runs on a common grid.

    :param runs: ``(trace, reference)`` pairs, one per instance and repeat.
    """
    if not runs:
        raise ContractViolation(f"no runs to build curve {label!r} from")
    table = np.array(
        [
            [relative_error(value, reference) for value in resample(trace, grid)]
            for trace, reference in runs
        ],
        dtype=np.float64,
    )
    return ErrorCurve(label, grid, tuple(float(v) for v in table.mean(axis=0)))


def write_curves_csv(curves: Sequence[ErrorCurve], stream: IO[str]) -> None:
    if not curves:
        raise ContractViolation("no curves to write")
    grid = curves[0].grid
    if any(curve.grid != grid for curve in curves):
        raise ContractViolation("curves must share one grid")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([grid.label] + [curve.label for curve in curves])
    for index, point in enumerate(grid.points):
        writer.writerow([repr(point)] + [repr(curve.errors[index]) for curve in curves])
