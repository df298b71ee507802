"""Shared fixtures: the four demo instances, their oracle optima, and
full-horizon traces reused across the analysis and acceptance tests."""

import time

import pytest

from tavopt import SolverConfig, run, solve_reference, solve_reference_lp
from tavopt.cli import reference_instance

INSTANCE_NAMES = ("polyhedral", "smooth", "polyhedral-extra", "smooth-extra")

MAIN_V = 100.0
MAIN_HORIZON = 200_000


def build_instance(name):
    objective = "linear" if name.startswith("polyhedral") else "quadratic"
    return reference_instance(objective, extra_constraint=name.endswith("-extra"))


@pytest.fixture(scope="session")
def instances():
    return {name: build_instance(name) for name in INSTANCE_NAMES}


@pytest.fixture(scope="session")
def oracle_values(instances):
    values = {}
    for name, spec in instances.items():
        result = solve_reference(spec, resolution=0.05)
        if name.startswith("polyhedral"):
            result = solve_reference_lp(spec)
        values[name] = result.f_opt
    return values


@pytest.fixture(scope="session")
def main_traces(instances):
    """Full traces at the reference settings, with wall-clock runtimes."""
    traces = {}
    for name, spec in instances.items():
        cfg = SolverConfig(v=MAIN_V, horizon=MAIN_HORIZON, restart_base=2)
        start = time.perf_counter()
        trace = run(spec, cfg)
        traces[name] = (trace, time.perf_counter() - start)
    return traces


@pytest.fixture(scope="session")
def main_estimates(instances):
    from tavopt import estimate_multiplier

    return {name: estimate_multiplier(spec, "grid-dual-max", v=MAIN_V, seed=0)
            for name, spec in instances.items()}
