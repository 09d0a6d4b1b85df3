import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .config import (
    AnyConfig,
    Budget,
    BudgetMode,
    CmcsConfig,
    Component,
    Strategy,
    TwoStageConfig,
)
from .engine import Number, RunResult, TransitionCounts
from .errors import CmcsError, SerializeError
from .matrix import TransitionMatrix


TOOL_VERSION = "0.1.0"

ResolveFunc = Callable[[Iterable[str]], Tuple[Component, ...]]
PathLike = Union[str, Path]


def _dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _loads(text: str, what: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SerializeError(f"malformed {what}: {e}") from e
    if not isinstance(data, dict):
        raise SerializeError(f"malformed {what}: expected a JSON object")
    return data


def dump_budget(budget: Budget) -> Dict[str, Any]:
    limit = int(budget.limit) if budget.is_iterations else budget.limit
    return {"mode": budget.mode.value, "limit": limit}


def load_budget(data: Mapping[str, Any]) -> Budget:
    try:
        return Budget(BudgetMode(data["mode"]), data["limit"])
    except (KeyError, TypeError, ValueError) as e:
        raise SerializeError(f"malformed budget: {data!r}") from e


@dataclass(frozen=True)
class ConfigFile:
    """A trained configuration plus what is needed to run it again."""

    strategy: Strategy
    config: AnyConfig
    vnd: Tuple[Component, ...] = ()
    vnd_threshold: float = 0.5
    faithful_b: bool = False
    provenance: Mapping[str, Any] = field(default_factory=dict, compare=False)


def _dump_sub(config: CmcsConfig) -> Dict[str, Any]:
    return {
        "components": list(config.names),
        "denominator": config.size,
        "m_succ": config.m_succ.to_lists(),
        "m_fail": config.m_fail.to_lists(),
    }


def _load_sub(data: Mapping[str, Any], resolve: ResolveFunc) -> CmcsConfig:
    components = resolve(data["components"])
    if data["denominator"] != len(components):
        raise SerializeError(
            f"denominator {data['denominator']} does not match "
            f"{len(components)} components"
        )
    return CmcsConfig(
        components,
        TransitionMatrix.from_rows(data["m_succ"]),
        TransitionMatrix.from_rows(data["m_fail"]),
    )


def dump_config(file: ConfigFile) -> str:
    data: Dict[str, Any] = {"strategy": file.strategy.value}
    if isinstance(file.config, TwoStageConfig):
        data["split"] = file.config.split
        data["sub1"] = _dump_sub(file.config.sub1)
        data["sub2"] = _dump_sub(file.config.sub2)
    else:
        data.update(_dump_sub(file.config))
    if file.strategy is Strategy.B:
        data["vnd"] = [component.name for component in file.vnd]
        data["vnd_threshold"] = file.vnd_threshold
        data["faithful_b"] = file.faithful_b
    data["provenance"] = dict(file.provenance)
    return _dumps(data)


def load_config(text: str, resolve: ResolveFunc) -> ConfigFile:
    data = _loads(text, "configuration")
    try:
        strategy = Strategy(data["strategy"])
        if strategy is Strategy.C:
            config: AnyConfig = TwoStageConfig(
                _load_sub(data["sub1"], resolve),
                _load_sub(data["sub2"], resolve),
                float(data["split"]),
            )
        else:
            config = _load_sub(data, resolve)
        vnd = resolve(data.get("vnd", ()))
        return ConfigFile(
            strategy,
            config,
            vnd,
            float(data.get("vnd_threshold", 0.5)),
            bool(data.get("faithful_b", False)),
            data.get("provenance", {}),
        )
    except SerializeError:
        raise
    except CmcsError as e:
        raise SerializeError(f"invalid configuration: {e}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise SerializeError(f"malformed configuration: {e!r}") from e


@dataclass(frozen=True)
class BaselineTable:
    entries: Mapping[str, Number]
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.entries.items():
            if not value > 0:
                raise SerializeError(f"baseline for {name} must be positive: {value}")

    def __getitem__(self, name: str) -> Number:
        return self.entries[name]

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def missing(self, names: Iterable[str]) -> List[str]:
        return [name for name in names if name not in self.entries]


def dump_baseline(table: BaselineTable) -> str:
    return _dumps(
        {
            "provenance": dict(table.provenance),
            "entries": {name: table.entries[name] for name in sorted(table.entries)},
        }
    )


def load_baseline(text: str) -> BaselineTable:
    data = _loads(text, "baseline table")
    try:
        return BaselineTable(dict(data["entries"]), dict(data.get("provenance", {})))
    except (KeyError, TypeError, ValueError) as e:
        raise SerializeError(f"malformed baseline table: {e!r}") from e


def _dump_solution(solution: Any) -> Any:
    return solution.to_dict() if hasattr(solution, "to_dict") else solution


@dataclass(frozen=True)
class ResultRecord:
    instance: str
    strategy: Strategy
    seed: int
    budget: Budget
    result: RunResult


def dump_result(record: ResultRecord) -> str:
    result = record.result
    return _dumps(
        {
            "instance": record.instance,
            "strategy": record.strategy.value,
            "seed": record.seed,
            "budget": dump_budget(record.budget),
            "best_objective": result.best_objective,
            "best_solution": _dump_solution(result.best_solution),
            "iterations": result.iterations_executed,
            "trace": [[stamp, objective] for stamp, objective in result.trace],
            "transitions": [
                {
                    "succ": [list(row) for row in counts.succ],
                    "fail": [list(row) for row in counts.fail],
                }
                for counts in result.transitions
            ],
        }
    )


def load_result(
    text: str, load_solution: Optional[Callable[[Any], Any]] = None
) -> ResultRecord:
    data = _loads(text, "result record")
    try:
        solution = data["best_solution"]
        if load_solution is not None:
            solution = load_solution(solution)
        result = RunResult(
            best_solution=solution,
            best_objective=data["best_objective"],
            trace=tuple((float(t), objective) for t, objective in data["trace"]),
            iterations_executed=int(data["iterations"]),
            transitions=tuple(
                TransitionCounts(
                    tuple(tuple(row) for row in counts["succ"]),
                    tuple(tuple(row) for row in counts["fail"]),
                )
                for counts in data.get("transitions", ())
            ),
        )
        return ResultRecord(
            data["instance"],
            Strategy(data["strategy"]),
            int(data["seed"]),
            load_budget(data["budget"]),
            result,
        )
    except SerializeError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SerializeError(f"malformed result record: {e!r}") from e


def read_text(path: PathLike) -> str:
    return Path(path).read_text(encoding="utf-8")
