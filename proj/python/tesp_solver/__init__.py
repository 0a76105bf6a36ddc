"""Transmission expansion and storage planning solver.

Thin package over the C++ core: parse or generate instances, evaluate plans
against the operational LP, and run the benders / bees / bbha solver modes.
"""

from ._core import (
    Instance,
    RunReport,
    brute_force,
    demand_profiles,
    evaluate_plan,
    generate_instance,
    master_cost,
    normalize_plan,
    parse_instance,
    run,
    scaled_trapz,
    serialize_instance,
    true_fitness,
    validate_instance,
)

__all__ = [
    "Instance",
    "RunReport",
    "brute_force",
    "demand_profiles",
    "evaluate_plan",
    "generate_instance",
    "master_cost",
    "normalize_plan",
    "parse_instance",
    "run",
    "scaled_trapz",
    "serialize_instance",
    "true_fitness",
    "validate_instance",
]
