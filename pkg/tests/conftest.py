import os

import pytest

import skillbo.harness as harness

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "skillbo", "scenarios")


def scenario_path(name: str) -> str:
    return os.path.abspath(os.path.join(SCENARIO_DIR, f"{name}.yaml"))


@pytest.fixture(scope="session")
def push_scenario():
    return harness.load_scenario(scenario_path("push"))


@pytest.fixture(scope="session")
def peg_scenario():
    return harness.load_scenario(scenario_path("peg"))


@pytest.fixture(scope="session")
def push_plan(push_scenario):
    return harness.plan_scenario(push_scenario)


@pytest.fixture(scope="session")
def peg_plan(peg_scenario):
    return harness.plan_scenario(peg_scenario)


@pytest.fixture()
def tiny_scenario_factory(peg_scenario):
    """Small peg variant for fast harness-level tests."""
    import copy

    def make(worlds=2, horizon=3.0):
        doc = copy.deepcopy(peg_scenario.document)
        doc["bo"]["iterations"] = 0
        doc["randomization"]["worlds"] = worlds
        doc["episode"]["horizon"] = horizon
        return harness.parse_scenario(doc)

    return make
