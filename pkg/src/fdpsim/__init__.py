"""Online food-delivery dispatch under the maximum flow time objective."""
from .instance import INF, Instance, Request, Schedule, Trip, generate_feasible, validate
from .metric import MetricGraph, RootedTree
from .sim import Doubling, run_online

__all__ = [
    "INF",
    "Doubling",
    "Instance",
    "MetricGraph",
    "Request",
    "RootedTree",
    "Schedule",
    "Trip",
    "generate_feasible",
    "run_online",
    "validate",
]
