"""Scoring induced schemas against gold schemas.

Induced clusters are matched to gold slots by nearest centroid cosine
(cutoff 0.8, inclusive), where both centroids are recomputed from bare
value strings with the same evaluation embedder so the two sides are
commensurate.  Value-level precision/recall then compare pooled predicted
values against gold values via fuzzy string matching, averaged without
weighting across matched gold slots.  Annotation tallies (completeness /
correctness proportions) ride along when annotation files are supplied.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .embedding import EmbedderConfig, cosine_similarity, embed_batch
from .errors import (
    CorpusFormatError,
    EmptyAnnotations,
    SchemaValidationError,
)
from .induction import InducedSchema, centroid

SIM_THRESHOLD = 0.8
FUZZY_THRESHOLD = 0.9


@dataclass(frozen=True)
class GoldSlot:
    name: str
    values: list[str]


@dataclass
class GoldSchema:
    slots: list[GoldSlot]


@dataclass
class SlotMapping:
    """Induced cluster -> gold slot (or None), with best similarities."""

    assignment: dict[int, str | None]
    similarity: dict[int, float]


@dataclass
class PerSlotValues:
    vp: float
    vr: float
    f1: float
    matched_cluster_ids: list[int]


@dataclass
class EvalReport:
    slot_precision: float
    slot_recall: float
    slot_f1: float
    slot_count: int
    value_precision: float
    value_recall: float
    value_f1: float
    per_gold_slot: dict[str, PerSlotValues] = field(default_factory=dict)
    no_matches: bool = False
    cp: float | None = None
    cr: float | None = None


@dataclass
class AnnotationSet:
    completeness_items: list[tuple[str, bool]] = field(default_factory=list)
    correctness_items: list[tuple[int, bool]] = field(default_factory=list)


def load_gold_schema(path) -> GoldSchema:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaValidationError("$", f"invalid JSON: {exc.msg}")
    if "slots" not in obj or not isinstance(obj["slots"], list):
        raise SchemaValidationError("slots", "missing or not a list")
    slots = []
    names = set()
    for i, raw in enumerate(obj["slots"]):
        where = f"slots[{i}]"
        if "name" not in raw or "values" not in raw:
            raise SchemaValidationError(where, "missing 'name' or 'values'")
        name = raw["name"]
        values = raw["values"]
        if name in names:
            raise SchemaValidationError(f"{where}.name", f"duplicate slot {name!r}")
        if not values:
            raise SchemaValidationError(f"{where}.values", "empty value list")
        names.add(name)
        slots.append(GoldSlot(name=name, values=[str(v) for v in values]))
    return GoldSchema(slots=slots)


def map_clusters(
    induced: InducedSchema,
    gold: GoldSchema,
    embedder: EmbedderConfig,
    threshold: float = SIM_THRESHOLD,
    workers: int = 1,
) -> SlotMapping:
    """Assign each induced cluster to its nearest gold slot by centroid cosine.

    Centroids on both sides are means of bare-value embeddings.  A cluster
    maps to the most similar gold slot when similarity >= threshold
    (inclusive), else to None; ties break by gold slot order.
    """
    texts = sorted(
        {v for slot in gold.slots for v in slot.values}
        | {v for c in induced.clusters for v in c.values}
    )
    if not texts:
        return SlotMapping(assignment={}, similarity={})
    matrix = embed_batch(embedder, texts, workers=workers)
    vec = {text: matrix[i] for i, text in enumerate(texts)}

    gold_centroids = [
        (slot.name, centroid([vec[v] for v in slot.values])) for slot in gold.slots
    ]
    assignment: dict[int, str | None] = {}
    similarity: dict[int, float] = {}
    for c in induced.clusters:
        c_centroid = centroid([vec[v] for v in c.values])
        best_name: str | None = None
        best_sim = -2.0
        for name, g_centroid in gold_centroids:
            sim = cosine_similarity(c_centroid, g_centroid)
            if sim > best_sim:
                best_sim = sim
                best_name = name
        similarity[c.cluster_id] = best_sim
        assignment[c.cluster_id] = best_name if best_sim >= threshold else None
    return SlotMapping(assignment=assignment, similarity=similarity)


def slot_metrics(
    mapping: SlotMapping, gold: GoldSchema
) -> tuple[float, float, float, int]:
    """(slot precision, slot recall, slot F1, induced slot count)."""
    total = len(mapping.assignment)
    mapped = sum(1 for name in mapping.assignment.values() if name is not None)
    hit = {name for name in mapping.assignment.values() if name is not None}
    precision = mapped / total if total else 0.0
    recall = len(hit) / len(gold.slots) if gold.slots else 0.0
    f1 = _f1(precision, recall)
    return precision, recall, f1, total


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


_WHITESPACE = re.compile(r"\s+")


def _normalize_value(s: str) -> str:
    return _WHITESPACE.sub(" ", s.strip()).lower()


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            current.append(
                min(current[-1] + 1, previous[j] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def fuzzy_match(
    a: str, b: str, threshold: float = FUZZY_THRESHOLD, exact: bool = False
) -> bool:
    """Normalized-Levenshtein similarity test with exact-equality shortcut.

    Both strings are lowercased, trimmed, and whitespace-collapsed first;
    similarity is 1 - distance/max(len).  ``exact`` switches to pure
    normalized equality for ablation runs.
    """
    na, nb = _normalize_value(a), _normalize_value(b)
    if na == nb:
        return True
    if exact:
        return False
    longest = max(len(na), len(nb))
    return 1.0 - levenshtein(na, nb) / longest >= threshold


def value_metrics(
    mapping: SlotMapping,
    induced: InducedSchema,
    gold: GoldSchema,
    threshold: float = FUZZY_THRESHOLD,
    exact: bool = False,
) -> tuple[float, float, float, dict[str, PerSlotValues], bool]:
    """Per-gold-slot value precision/recall/F1 over matched slots.

    For each matched gold slot, predicted values pool across all clusters
    mapped to it (with multiplicity); precision is the fraction of pooled
    values fuzzy-matching some gold value, recall the fraction of distinct
    gold values fuzzy-matched by some pooled value.  The headline numbers
    are unweighted means over matched gold slots; (0, 0, 0) plus a flag
    when nothing matched.
    """
    by_cluster = {c.cluster_id: c for c in induced.clusters}
    matched: dict[str, list[int]] = {}
    for cluster_id in sorted(mapping.assignment):
        name = mapping.assignment[cluster_id]
        if name is not None:
            matched.setdefault(name, []).append(cluster_id)

    per_slot: dict[str, PerSlotValues] = {}
    for slot in gold.slots:
        if slot.name not in matched:
            continue
        cluster_ids = matched[slot.name]
        pooled = [v for cid in cluster_ids for v in by_cluster[cid].values]
        gold_values = list(dict.fromkeys(slot.values))
        vp_hits = sum(
            1
            for pred in pooled
            if any(fuzzy_match(pred, gv, threshold, exact) for gv in gold_values)
        )
        vr_hits = sum(
            1
            for gv in gold_values
            if any(fuzzy_match(gv, pred, threshold, exact) for pred in pooled)
        )
        vp = vp_hits / len(pooled)
        vr = vr_hits / len(gold_values)
        per_slot[slot.name] = PerSlotValues(
            vp=vp, vr=vr, f1=_f1(vp, vr), matched_cluster_ids=cluster_ids
        )

    if not per_slot:
        return 0.0, 0.0, 0.0, per_slot, True
    vps = [p.vp for p in per_slot.values()]
    vrs = [p.vr for p in per_slot.values()]
    f1s = [p.f1 for p in per_slot.values()]
    return (
        sum(vps) / len(vps),
        sum(vrs) / len(vrs),
        sum(f1s) / len(f1s),
        per_slot,
        False,
    )


def completeness_proportion(items: list[tuple[str, bool]]) -> float:
    """Fraction of state updates judged complete."""
    if not items:
        raise EmptyAnnotations("no completeness annotations")
    return sum(1 for _, ok in items if ok) / len(items)


def correctness_proportion(items: list[tuple[int, bool]]) -> float:
    """Fraction of slot-value pairs judged correct."""
    if not items:
        raise EmptyAnnotations("no correctness annotations")
    return sum(1 for _, ok in items if ok) / len(items)


def annotation_metrics(ann: AnnotationSet) -> tuple[float, float]:
    """(completeness proportion, correctness proportion)."""
    return (
        completeness_proportion(ann.completeness_items),
        correctness_proportion(ann.correctness_items),
    )


def load_annotations(paths) -> AnnotationSet:
    """Load annotation files, sniffing each record type by its fields."""
    ann = AnnotationSet()
    seen_turns: set[str] = set()
    seen_candidates: set[int] = set()
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusFormatError(path, line_no, f"invalid JSON: {exc.msg}")
                if "turn_key" in record and "complete" in record:
                    key = record["turn_key"]
                    if key in seen_turns:
                        raise CorpusFormatError(path, line_no, f"duplicate turn_key {key!r}")
                    seen_turns.add(key)
                    ann.completeness_items.append((key, bool(record["complete"])))
                elif "candidate_id" in record and "correct" in record:
                    key = record["candidate_id"]
                    if key in seen_candidates:
                        raise CorpusFormatError(
                            path, line_no, f"duplicate candidate_id {key}"
                        )
                    seen_candidates.add(key)
                    ann.correctness_items.append((key, bool(record["correct"])))
                else:
                    raise CorpusFormatError(path, line_no, "unrecognized annotation record")
    return ann


def evaluate_schema(
    induced: InducedSchema,
    gold: GoldSchema,
    embedder: EmbedderConfig,
    sim_threshold: float = SIM_THRESHOLD,
    fuzzy_threshold: float = FUZZY_THRESHOLD,
    exact_values: bool = False,
    annotations: AnnotationSet | None = None,
    workers: int = 1,
) -> EvalReport:
    """Full scoring pass: mapping, slot metrics, value metrics, tallies."""
    mapping = map_clusters(induced, gold, embedder, sim_threshold, workers=workers)
    sp, sr, sf1, count = slot_metrics(mapping, gold)
    vp, vr, vf1, per_slot, no_matches = value_metrics(
        mapping, induced, gold, fuzzy_threshold, exact_values
    )
    report = EvalReport(
        slot_precision=sp,
        slot_recall=sr,
        slot_f1=sf1,
        slot_count=count,
        value_precision=vp,
        value_recall=vr,
        value_f1=vf1,
        per_gold_slot=per_slot,
        no_matches=no_matches,
    )
    if annotations is not None:
        if annotations.completeness_items:
            report.cp = completeness_proportion(annotations.completeness_items)
        if annotations.correctness_items:
            report.cr = correctness_proportion(annotations.correctness_items)
    return report


def write_report(report: EvalReport, path, fmt: str = "machine") -> None:
    if fmt == "machine":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, sort_keys=True, indent=1)
            fh.write("\n")
    elif fmt == "text-table":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_text_table(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def report_to_dict(report: EvalReport) -> dict:
    return {
        "slot_precision": report.slot_precision,
        "slot_recall": report.slot_recall,
        "slot_f1": report.slot_f1,
        "slot_count": report.slot_count,
        "value_precision": report.value_precision,
        "value_recall": report.value_recall,
        "value_f1": report.value_f1,
        "per_gold_slot": {
            name: {
                "vp": p.vp,
                "vr": p.vr,
                "f1": p.f1,
                "matched_cluster_ids": p.matched_cluster_ids,
            }
            for name, p in report.per_gold_slot.items()
        },
        "no_matches": report.no_matches,
        "cp": report.cp,
        "cr": report.cr,
    }


def read_report(path) -> EvalReport:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return EvalReport(
            slot_precision=obj["slot_precision"],
            slot_recall=obj["slot_recall"],
            slot_f1=obj["slot_f1"],
            slot_count=obj["slot_count"],
            value_precision=obj["value_precision"],
            value_recall=obj["value_recall"],
            value_f1=obj["value_f1"],
            per_gold_slot={
                name: PerSlotValues(
                    vp=p["vp"],
                    vr=p["vr"],
                    f1=p["f1"],
                    matched_cluster_ids=list(p["matched_cluster_ids"]),
                )
                for name, p in obj["per_gold_slot"].items()
            },
            no_matches=obj["no_matches"],
            cp=obj["cp"],
            cr=obj["cr"],
        )
    except KeyError as exc:
        raise SchemaValidationError(str(exc), "missing report field")


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def render_text_table(report: EvalReport) -> str:
    """Human-readable layout: count column, slot P/R/F1, value P/R/F1."""
    lines = [
        f"{'C':>6}  {'SP':>6} {'SR':>6} {'S-F1':>6}  {'VP':>6} {'VR':>6} {'V-F1':>6}",
        (
            f"{report.slot_count:>6}  "
            f"{_pct(report.slot_precision):>6} {_pct(report.slot_recall):>6} "
            f"{_pct(report.slot_f1):>6}  "
            f"{_pct(report.value_precision):>6} {_pct(report.value_recall):>6} "
            f"{_pct(report.value_f1):>6}"
        ),
        "",
        f"{'gold slot':<24} {'VP':>6} {'VR':>6} {'F1':>6}  clusters",
    ]
    for name, p in report.per_gold_slot.items():
        ids = ",".join(str(i) for i in p.matched_cluster_ids)
        lines.append(
            f"{name:<24} {_pct(p.vp):>6} {_pct(p.vr):>6} {_pct(p.f1):>6}  {ids}"
        )
    if report.no_matches:
        lines.append("(no induced cluster matched any gold slot)")
    if report.cp is not None or report.cr is not None:
        parts = []
        if report.cp is not None:
            parts.append(f"CP {_pct(report.cp)}")
        if report.cr is not None:
            parts.append(f"CR {_pct(report.cr)}")
        lines.append("")
        lines.append("  ".join(parts))
    return "\n".join(lines) + "\n"
