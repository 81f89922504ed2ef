"""Metric suite: mapping, slot/value metrics, fuzzy matching, reports."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssikit.embedding import EmbedderConfig
from ssikit.errors import CorpusFormatError, EmptyAnnotations, SchemaValidationError
from ssikit.evaluation import (
    AnnotationSet,
    EvalReport,
    GoldSchema,
    GoldSlot,
    PerSlotValues,
    SlotMapping,
    annotation_metrics,
    completeness_proportion,
    correctness_proportion,
    evaluate_schema,
    fuzzy_match,
    levenshtein,
    load_annotations,
    load_gold_schema,
    map_clusters,
    read_report,
    render_text_table,
    slot_metrics,
    value_metrics,
    write_report,
)
from ssikit.hdbscan import ClusterParams
from ssikit.induction import InducedSchema, SlotCluster


def _file_embedder(tmp_path, table: dict[str, list[float]]) -> EmbedderConfig:
    path = tmp_path / "vectors.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for text, vec in table.items():
            fh.write(json.dumps({"text": text, "vector": vec}) + "\n")
    return EmbedderConfig(backend="file", path=str(path), dim=None, normalize=False)


def _schema(clusters) -> InducedSchema:
    return InducedSchema(
        clusters=clusters, noise=[], params=ClusterParams(), embedder={"backend": "file"}
    )


class TestMapClusters:
    def test_identical_centroid_maps_at_one(self, tmp_path):
        config = _file_embedder(tmp_path, {"a": [1.0, 0.0], "g": [1.0, 0.0]})
        schema = _schema([SlotCluster(0, "s", [0], ["a"], np.zeros(2))])
        gold = GoldSchema([GoldSlot("X", ["g"])])
        mapping = map_clusters(schema, gold, config)
        assert mapping.assignment == {0: "X"}
        assert mapping.similarity[0] == 1.0

    def test_orthogonal_is_none(self, tmp_path):
        config = _file_embedder(tmp_path, {"a": [1.0, 0.0], "g": [0.0, 1.0]})
        schema = _schema([SlotCluster(0, "s", [0], ["a"], np.zeros(2))])
        gold = GoldSchema([GoldSlot("X", ["g"])])
        mapping = map_clusters(schema, gold, config)
        assert mapping.assignment == {0: None}
        assert mapping.similarity[0] == 0.0

    def test_threshold_is_inclusive(self, tmp_path):
        # cosine([4,3,0], e0) = 4/5 = 0.8 exactly; "or higher" includes it
        config = _file_embedder(tmp_path, {"a": [4.0, 3.0, 0.0], "g": [1.0, 0.0, 0.0]})
        schema = _schema([SlotCluster(0, "s", [0], ["a"], np.zeros(3))])
        gold = GoldSchema([GoldSlot("X", ["g"])])
        mapping = map_clusters(schema, gold, config, threshold=0.8)
        assert mapping.similarity[0] == 0.8
        assert mapping.assignment == {0: "X"}

    def test_tie_breaks_by_gold_order(self, tmp_path):
        config = _file_embedder(tmp_path, {"a": [1.0, 0.0], "g1": [1.0, 0.0], "g2": [1.0, 0.0]})
        schema = _schema([SlotCluster(0, "s", [0], ["a"], np.zeros(2))])
        gold = GoldSchema([GoldSlot("first", ["g1"]), GoldSlot("second", ["g2"])])
        assert map_clusters(schema, gold, config).assignment == {0: "first"}

    def test_many_to_one_allowed(self, tmp_path):
        config = _file_embedder(
            tmp_path, {"a": [1.0, 0.0], "b": [1.0, 0.0], "g": [1.0, 0.0]}
        )
        schema = _schema(
            [
                SlotCluster(0, "s", [0], ["a"], np.zeros(2)),
                SlotCluster(1, "t", [1], ["b"], np.zeros(2)),
            ]
        )
        gold = GoldSchema([GoldSlot("X", ["g"])])
        assert map_clusters(schema, gold, config).assignment == {0: "X", 1: "X"}


class TestSlotMetrics:
    def test_formula_application(self):
        mapping = SlotMapping(
            assignment={0: "A", 1: "A", 2: "B", 3: None},
            similarity={0: 1.0, 1: 0.9, 2: 0.85, 3: 0.1},
        )
        gold = GoldSchema([GoldSlot("A", ["x"]), GoldSlot("B", ["y"]), GoldSlot("C", ["z"])])
        sp, sr, f1, count = slot_metrics(mapping, gold)
        assert sp == 0.75
        assert sr == 2 / 3
        assert count == 4
        assert f1 == 2.0 * sp * sr / (sp + sr)

    def test_no_induced_clusters(self):
        mapping = SlotMapping(assignment={}, similarity={})
        gold = GoldSchema([GoldSlot("A", ["x"])])
        assert slot_metrics(mapping, gold) == (0.0, 0.0, 0.0, 0)

    def test_sp_and_sr_products_are_integers(self):
        mapping = SlotMapping(
            assignment={0: "A", 1: None, 2: "B"}, similarity={0: 1.0, 1: 0.0, 2: 0.9}
        )
        gold = GoldSchema([GoldSlot("A", ["x"]), GoldSlot("B", ["y"])])
        sp, sr, _, count = slot_metrics(mapping, gold)
        assert (sp * count) == int(sp * count)
        assert (sr * len(gold.slots)) == int(sr * len(gold.slots))


class TestFuzzyMatch:
    def test_case_fold_equality(self):
        assert fuzzy_match("Italian", "italian") is True

    def test_empty_vs_nonempty(self):
        assert fuzzy_match("", "x") is False

    def test_centre_center(self):
        # distance 2 over length 6: similarity 2/3 < 0.9
        assert levenshtein("centre", "center") == 2
        assert fuzzy_match("centre", "center") is False
        assert fuzzy_match("centre", "center", threshold=0.6) is True

    def test_whitespace_collapse(self):
        assert fuzzy_match("  new   york ", "New York") is True

    def test_exact_mode(self):
        assert fuzzy_match("guesthouse", "guest house", exact=True) is False
        assert fuzzy_match("Same", "same", exact=True) is True

    @given(st.text(max_size=16), st.text(max_size=16))
    @settings(max_examples=200)
    def test_symmetric(self, a, b):
        assert fuzzy_match(a, b) == fuzzy_match(b, a)

    @given(st.text(max_size=16), st.floats(0.0, 1.0))
    @settings(max_examples=100)
    def test_reflexive(self, a, threshold):
        assert fuzzy_match(a, a, threshold=threshold) is True


class TestValueMetrics:
    def _run(self, tmp_path, gold_slots, clusters, table, **kwargs):
        config = _file_embedder(tmp_path, table)
        schema = _schema(clusters)
        gold = GoldSchema(gold_slots)
        mapping = map_clusters(schema, gold, config)
        return value_metrics(mapping, schema, gold, **kwargs)

    def test_half_and_half(self, tmp_path):
        vp, vr, f1, per_slot, no_matches = self._run(
            tmp_path,
            [GoldSlot("food", ["italian", "chinese"])],
            [SlotCluster(0, "food", [0, 1], ["Italian", "thai"], np.zeros(2))],
            {"italian": [1.0, 0.0], "chinese": [1.0, 0.0], "Italian": [1.0, 0.0], "thai": [1.0, 0.0]},
        )
        assert (vp, vr, f1) == (0.5, 0.5, 0.5)
        assert not no_matches

    def test_perfect_pool(self, tmp_path):
        vp, vr, f1, _, _ = self._run(
            tmp_path,
            [GoldSlot("food", ["italian", "chinese"])],
            [SlotCluster(0, "food", [0, 1], ["italian", "chinese"], np.zeros(2))],
            {"italian": [1.0, 0.0], "chinese": [1.0, 0.0]},
        )
        assert (vp, vr, f1) == (1.0, 1.0, 1.0)

    def test_mean_of_per_slot_f1_not_harmonic(self, tmp_path):
        # per-slot F1 {1.0, 0.0}: the average rule gives 0.5, a harmonic
        # combination would give 0.
        vp, vr, f1, per_slot, _ = self._run(
            tmp_path,
            [GoldSlot("A", ["x"]), GoldSlot("B", ["y"])],
            [
                SlotCluster(0, "a", [0], ["x"], np.zeros(2)),
                SlotCluster(1, "b", [1], ["z"], np.zeros(2)),
            ],
            {"x": [1.0, 0.0], "y": [0.0, 1.0], "z": [0.0, 1.0]},
        )
        assert per_slot["A"].f1 == 1.0
        assert per_slot["B"].f1 == 0.0
        assert f1 == 0.5

    def test_unweighted_mean_not_harmonic_of_means(self, tmp_path):
        # per-slot (VP, VR): A (1, 0.5), B (0.5, 1) -> each F1 = 2/3, so
        # ValueF1 = 2/3; harmonic of mean VP and mean VR would be 0.75.
        vp, vr, f1, per_slot, _ = self._run(
            tmp_path,
            [GoldSlot("A", ["a1", "a2"]), GoldSlot("B", ["b1"])],
            [
                SlotCluster(0, "a", [0], ["a1"], np.zeros(2)),
                SlotCluster(1, "b", [1, 2], ["b1", "junk"], np.zeros(2)),
            ],
            {
                "a1": [1.0, 0.0],
                "a2": [1.0, 0.0],
                "b1": [0.0, 1.0],
                "junk": [0.0, 1.0],
            },
        )
        assert per_slot["A"].vp == 1.0 and per_slot["A"].vr == 0.5
        assert per_slot["B"].vp == 0.5 and per_slot["B"].vr == 1.0
        assert vp == 0.75 and vr == 0.75
        assert f1 == sum([per_slot["A"].f1, per_slot["B"].f1]) / 2

    def test_duplicate_gold_values_do_not_change_metrics(self, tmp_path):
        table = {"x": [1.0, 0.0], "y": [1.0, 0.0], "pred": [1.0, 0.0]}
        base = self._run(
            tmp_path,
            [GoldSlot("A", ["x", "y"])],
            [SlotCluster(0, "a", [0], ["pred"], np.zeros(2))],
            table,
        )
        duplicated = self._run(
            tmp_path,
            [GoldSlot("A", ["x", "x", "x", "y"])],
            [SlotCluster(0, "a", [0], ["pred"], np.zeros(2))],
            table,
        )
        assert base[:3] == duplicated[:3]

    def test_no_matched_slots_flag(self, tmp_path):
        vp, vr, f1, per_slot, no_matches = self._run(
            tmp_path,
            [GoldSlot("A", ["x"])],
            [SlotCluster(0, "a", [0], ["z"], np.zeros(2))],
            {"x": [1.0, 0.0], "z": [0.0, 1.0]},
        )
        assert (vp, vr, f1) == (0.0, 0.0, 0.0)
        assert per_slot == {}
        assert no_matches


class TestFrozenMetricFixture:
    """The hand-computed 3x3 fixture; every number frozen exactly."""

    def test_exact_values(self, metric_fixture, annotation_files):
        schema, gold_path, config = metric_fixture
        gold = load_gold_schema(gold_path)
        annotations = load_annotations(annotation_files)
        report = evaluate_schema(schema, gold, config, annotations=annotations)

        assert report.slot_count == 3
        assert report.slot_precision == 2 / 3
        assert report.slot_recall == 2 / 3
        sp = sr = 2 / 3
        assert report.slot_f1 == 2.0 * sp * sr / (sp + sr)

        vp_color, vr_color = 2 / 3, 1.0
        f1_color = 2.0 * vp_color * vr_color / (vp_color + vr_color)
        vp_animal, vr_animal = 1 / 2, 1 / 2
        f1_animal = 2.0 * vp_animal * vr_animal / (vp_animal + vr_animal)
        per = report.per_gold_slot
        assert set(per) == {"color", "animal"}
        assert per["color"].vp == vp_color
        assert per["color"].vr == vr_color
        assert per["color"].f1 == f1_color
        assert per["color"].matched_cluster_ids == [0]
        assert per["animal"].vp == vp_animal
        assert per["animal"].vr == vr_animal
        assert per["animal"].f1 == f1_animal
        assert per["animal"].matched_cluster_ids == [1]

        assert report.value_precision == sum([vp_color, vp_animal]) / 2
        assert report.value_recall == sum([vr_color, vr_animal]) / 2
        assert report.value_f1 == sum([f1_color, f1_animal]) / 2
        assert report.no_matches is False
        assert report.cp == 0.5
        assert report.cr == 1.0


class TestAnnotationMetrics:
    def test_cp(self):
        items = [("a", True), ("b", True), ("c", False), ("d", False)]
        assert completeness_proportion(items) == 0.5

    def test_cr_all_true(self):
        assert correctness_proportion([(i, True) for i in range(7)]) == 1.0

    def test_both(self):
        ann = AnnotationSet(
            completeness_items=[("a", True)], correctness_items=[(0, False)]
        )
        assert annotation_metrics(ann) == (1.0, 0.0)

    def test_empty_raises(self):
        with pytest.raises(EmptyAnnotations):
            completeness_proportion([])
        with pytest.raises(EmptyAnnotations):
            correctness_proportion([])

    def test_load_sniffs_types(self, annotation_files):
        ann = load_annotations(annotation_files)
        assert len(ann.completeness_items) == 4
        assert len(ann.correctness_items) == 7

    def test_duplicate_keys_rejected(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        path.write_text(
            json.dumps({"turn_key": "t", "complete": True})
            + "\n"
            + json.dumps({"turn_key": "t", "complete": False})
            + "\n"
        )
        with pytest.raises(CorpusFormatError):
            load_annotations([path])


class TestGoldSchemaLoading:
    def test_duplicate_names_rejected(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"slots": [
            {"name": "a", "values": ["x"]},
            {"name": "a", "values": ["y"]},
        ]}))
        with pytest.raises(SchemaValidationError):
            load_gold_schema(path)

    def test_empty_values_rejected(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"slots": [{"name": "a", "values": []}]}))
        with pytest.raises(SchemaValidationError):
            load_gold_schema(path)


class TestReports:
    def _report(self):
        return EvalReport(
            slot_precision=0.856,
            slot_recall=0.968,
            slot_f1=0.909,
            slot_count=180,
            value_precision=0.814,
            value_recall=0.702,
            value_f1=0.705,
            per_gold_slot={
                "area": PerSlotValues(vp=0.5, vr=1.0, f1=2 / 3, matched_cluster_ids=[0, 2])
            },
            cp=0.957,
            cr=0.812,
        )

    def test_machine_round_trip(self, tmp_path):
        report = self._report()
        path = tmp_path / "report.json"
        write_report(report, path, fmt="machine")
        assert read_report(path) == report

    def test_table_renders_one_decimal_percentages(self):
        text = render_text_table(self._report())
        first_two_lines = text.splitlines()[:2]
        assert "180" in first_two_lines[1]
        assert "85.6" in first_two_lines[1] and "96.8" in first_two_lines[1]
        assert "90.9" in first_two_lines[1]
        assert "81.4" in first_two_lines[1] and "70.2" in first_two_lines[1]
        assert "CP 95.7" in text and "CR 81.2" in text

    def test_empty_per_slot_header_only(self):
        report = EvalReport(
            slot_precision=0.0,
            slot_recall=0.0,
            slot_f1=0.0,
            slot_count=0,
            value_precision=0.0,
            value_recall=0.0,
            value_f1=0.0,
        )
        text = render_text_table(report)
        lines = [line for line in text.splitlines() if line.strip()]
        assert any("gold slot" in line for line in lines)
        assert lines[-1].startswith("gold slot") or "no induced" in lines[-1]

    def test_text_table_file(self, tmp_path):
        path = tmp_path / "report.txt"
        write_report(self._report(), path, fmt="text-table")
        assert "85.6" in path.read_text()

    def test_added_cluster_never_decreases_recall(self):
        gold = GoldSchema([GoldSlot("A", ["x"]), GoldSlot("B", ["y"])])
        small = SlotMapping(assignment={0: "A"}, similarity={0: 1.0})
        bigger = SlotMapping(
            assignment={0: "A", 1: "B"}, similarity={0: 1.0, 1: 0.9}
        )
        unmapped_extra = SlotMapping(
            assignment={0: "A", 1: None}, similarity={0: 1.0, 1: 0.0}
        )
        _, sr_small, _, _ = slot_metrics(small, gold)
        _, sr_big, _, _ = slot_metrics(bigger, gold)
        _, sr_unmapped, _, _ = slot_metrics(unmapped_extra, gold)
        assert sr_big >= sr_small
        assert sr_unmapped == sr_small
