from .components import COMPONENTS, DEFAULT_POOL, DEFAULT_VND, baseline_config, resolve
from .instance import Ap3Instance, Family, InstanceHeader, generate_instance
from .lap import solve_lap
from .neighborhoods import (
    all_dimension_hungarian,
    best_swap,
    first_swap,
    first_worsen,
    hungarian_d,
    min_dimension_hungarian,
    random_dimension_hungarian,
    random_swap,
    shuffle_three,
    swap_neighborhood,
    worst_swap,
)
from .solution import Ap3Solution, random_solution

__all__ = [
    "Ap3Instance",
    "Ap3Solution",
    "COMPONENTS",
    "DEFAULT_POOL",
    "DEFAULT_VND",
    "Family",
    "InstanceHeader",
    "all_dimension_hungarian",
    "baseline_config",
    "best_swap",
    "first_swap",
    "first_worsen",
    "generate_instance",
    "hungarian_d",
    "min_dimension_hungarian",
    "random_dimension_hungarian",
    "random_solution",
    "random_swap",
    "resolve",
    "shuffle_three",
    "solve_lap",
    "swap_neighborhood",
    "worst_swap",
]
