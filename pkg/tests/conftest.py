"""Shared fixtures: planted corpora and the frozen hand-computed eval fixture."""

from __future__ import annotations

import json

import numpy as np
import pytest

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in _ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"{name}: {outcome.upper()}")

from ssikit.embedding import EmbedderConfig
from ssikit.hdbscan import ClusterParams
from ssikit.induction import InducedSchema, SlotCluster
from ssikit.synth import PlantedCorpus, make_planted_corpus


@pytest.fixture(scope="session")
def planted() -> PlantedCorpus:
    """The acceptance-scale planted corpus: 8 slots x 40 + 40 outliers."""
    return make_planted_corpus()


@pytest.fixture(scope="session")
def planted_dir(planted, tmp_path_factory):
    """Planted corpus written to disk once for CLI-level tests."""
    out = tmp_path_factory.mktemp("planted")
    planted.write(
        out / "candidates.jsonl",
        out / "vectors.jsonl",
        out / "gold.json",
        out / "labels.json",
    )
    return out


E0 = [1.0, 0.0, 0.0]
E1 = [0.0, 1.0, 0.0]
E2 = [0.0, 0.0, 1.0]

# Hand-computed metric fixture: 3 induced clusters, 3 gold slots, 12 values.
# Values embed onto coordinate axes so every cosine and every fuzzy decision
# is checkable by hand; expected metrics are frozen in the tests.
FIXTURE_VECTORS = {
    "red": E0,
    "blue": E0,
    "cat": E1,
    "dog": E1,
    "one": E2,
    "two": E2,
    "Red": E0,
    "crimson": E0,
    "mouse": E1,
    "qux": [1.0, 1.0, 1.0],
}

FIXTURE_GOLD = {
    "slots": [
        {"name": "color", "values": ["red", "blue"]},
        {"name": "animal", "values": ["cat", "dog"]},
        {"name": "number", "values": ["one", "two"]},
    ]
}


def build_fixture_schema() -> InducedSchema:
    clusters = [
        SlotCluster(0, "color", [0, 1, 2], ["Red", "crimson", "blue"], np.array(E0)),
        SlotCluster(1, "animal", [3, 4], ["cat", "mouse"], np.array(E1)),
        SlotCluster(2, "misc", [5], ["qux"], np.array([1.0, 1.0, 1.0])),
    ]
    return InducedSchema(
        clusters=clusters,
        noise=[],
        params=ClusterParams(),
        embedder={"backend": "file", "normalize": False},
    )


@pytest.fixture()
def metric_fixture(tmp_path):
    """(schema, gold_path, embedder config) for the frozen metric fixture."""
    vectors_path = tmp_path / "eval_vectors.jsonl"
    with open(vectors_path, "w", encoding="utf-8") as fh:
        for text, vec in FIXTURE_VECTORS.items():
            fh.write(json.dumps({"text": text, "vector": vec}) + "\n")
    gold_path = tmp_path / "gold.json"
    gold_path.write_text(json.dumps(FIXTURE_GOLD))
    config = EmbedderConfig(backend="file", path=str(vectors_path), dim=None, normalize=False)
    return build_fixture_schema(), gold_path, config


@pytest.fixture()
def annotation_files(tmp_path):
    """Completeness [T,T,F,F] and correctness [T x 7] annotation files."""
    completeness = tmp_path / "completeness.jsonl"
    with open(completeness, "w", encoding="utf-8") as fh:
        for i, ok in enumerate([True, True, False, False]):
            fh.write(json.dumps({"turn_key": f"dlg_0:{i}", "complete": ok}) + "\n")
    correctness = tmp_path / "correctness.jsonl"
    with open(correctness, "w", encoding="utf-8") as fh:
        for i in range(7):
            fh.write(json.dumps({"candidate_id": i, "correct": True}) + "\n")
    return completeness, correctness
