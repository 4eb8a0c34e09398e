import copy
import json
from pathlib import Path

import pytest

from chainnet.cli import simulate
from chainnet.scenario import load_scenario, parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# minimal single-agent-per-tier chain used by unit and CLI tests
MINIMAL_DOC = {
    "seed": 7,
    "horizon": 40,
    "mode": "decentralized",
    "agents": [
        {"id": "raw", "tier": "RawMaterial", "services": ["supply:raw"],
         "reliability": 0.95, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 80.0, "unit_price": 1.0},
        {"id": "sto", "tier": "Storage", "services": ["supply:stored"],
         "reliability": 0.9, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 80.0, "unit_price": 2.0},
        {"id": "tra", "tier": "Transportation", "services": ["supply:freight"],
         "reliability": 0.85, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 80.0, "unit_price": 3.0},
        {"id": "pro", "tier": "Production", "services": ["supply:widget"],
         "reliability": 0.9, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 80.0, "unit_price": 8.0},
        {"id": "dis", "tier": "Distribution", "services": ["supply:goods"],
         "reliability": 0.9, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 80.0, "unit_price": 12.0},
        {"id": "sal", "tier": "Sale", "services": [],
         "reliability": 0.9, "lead_time": 2,
         "policy": {"kind": "order_up_to", "window": 4, "safety_factor": 1.0},
         "initial_stock": 60.0, "unit_price": 15.0},
    ],
    "demand": {"kind": "constant", "mean": 5.0},
    "weights": {"w_price": 0.5, "w_lead": 0.3, "w_rel": 0.2},
    "bid_window": 2,
    "costs": {"h": 1.0, "b": 2.0},
    "failures": [],
    "dwell": 3,
}


def minimal_doc(**overrides) -> dict:
    doc = copy.deepcopy(MINIMAL_DOC)
    doc.update(overrides)
    return doc


@pytest.fixture
def make_config():
    """Builder for small scenario configs with field overrides."""

    def build(**overrides):
        return parse_scenario(minimal_doc(**overrides))

    return build


@pytest.fixture(scope="session")
def reference_config():
    return load_scenario(SCENARIO_DIR / "reference.json")


@pytest.fixture(scope="session")
def reference_run(reference_config):
    """The frozen reference run (decentralized, seed 42, horizon 500)."""
    return simulate(reference_config)


@pytest.fixture(scope="session")
def reference_doc():
    return json.loads((SCENARIO_DIR / "reference.json").read_text())
