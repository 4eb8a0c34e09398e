"""Frozen golden digests of the reference run's artifacts.

Generated once after the full invariant and acceptance suites passed, then
frozen. Any change to the engine, codec, scenario or serialization that
shifts a single byte of the reference outputs trips this test; regenerate
deliberately if the change is intended (see README).
"""

import hashlib

import pytest

from chainnet import cli

GOLDEN_SHA256 = {
    "events.jsonl": "b0ed418cf7c4ca450ad4d6e5e07c2e0718b15c3d53bd78763f3d89956734bf91",
    "snapshots.csv": "c2ad9964475a2912932f40420e388fcf9de9c7eea21dfc51e7d9bcaa53cf155c",
    "metrics.json": "2350338261c919cfc3797a847549e0105a47748c384a2b056d0cc1c37b5ee070",
    "metrics.csv": "a6fb8a8108fef89a7a67cf3434b1133a738031bf252b675932d0039f54ac5308",
}

GOLDEN_FILL_RATE = 0.8676093224813575


@pytest.fixture(scope="module")
def golden_outputs(reference_config, tmp_path_factory):
    return cli.run(reference_config, tmp_path_factory.mktemp("golden"))


@pytest.mark.parametrize("name", sorted(GOLDEN_SHA256))
def test_reference_artifact_digest(golden_outputs, name):
    path = {
        "events.jsonl": golden_outputs.event_log,
        "snapshots.csv": golden_outputs.snapshots,
        "metrics.json": golden_outputs.metrics,
        "metrics.csv": golden_outputs.metrics_csv,
    }[name]
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    assert digest == GOLDEN_SHA256[name], (
        f"{name} drifted from the frozen reference run; if intentional, "
        f"regenerate the digests (README: golden files)")


def test_reference_fill_rate_frozen(golden_outputs):
    assert golden_outputs.report.fill_rate == pytest.approx(GOLDEN_FILL_RATE, abs=1e-12)
