"""Seeded synthetic corpora with planted slot structure.

Builds a corpus whose candidate embeddings are Gaussian blobs on the unit
sphere (one blob per planted slot) plus uniform-on-sphere outliers, and
writes the candidate/vector/gold files the CLI consumes.  Only fixture
generation is seeded; the pipeline itself is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .candidates import write_candidates
from .embedding import render_candidate_text, write_vector_file


@dataclass
class PlantedCorpus:
    records: list[tuple[str, int, str, str]]  # (dialogue_id, turn_index, slot, value)
    texts: list[str]
    vectors: np.ndarray
    labels: list[int]  # planted blob id per candidate, -1 for outliers
    slot_names: list[str]
    gold_slots: list[dict]

    def write(self, candidates_path, vectors_path, gold_path, labels_path=None):
        write_candidates(candidates_path, self.records)
        write_vector_file(vectors_path, self.texts, self.vectors)
        with open(gold_path, "w", encoding="utf-8") as fh:
            json.dump({"slots": self.gold_slots}, fh, indent=1)
            fh.write("\n")
        if labels_path is not None:
            with open(labels_path, "w", encoding="utf-8") as fh:
                json.dump({"labels": self.labels}, fh)
                fh.write("\n")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.sqrt(np.dot(v, v))


def make_planted_corpus(
    n_slots: int = 8,
    per_slot: int = 40,
    n_outliers: int = 40,
    dim: int = 12,
    sigma: float = 0.02,
    outlier_halfwidth: float = 5.0,
    minority_fraction: float = 0.25,
    seed: int = 20240901,
) -> PlantedCorpus:
    """Planted-slot corpus: tight Gaussian blobs plus diffuse outliers.

    Blob centers are random unit vectors re-drawn until every pair is at
    least 10*sigma apart; outliers are uniform over a box much larger than
    the blob arrangement, so their local density is far below any blob's.
    Each blob candidate carries the planted slot name (with a minority
    carrying a variant name, so majority naming is actually exercised) and
    a unique value string.  Run the pipeline on these vectors with
    normalization off: the file holds the intended geometry as-is.
    """
    rng = np.random.default_rng(seed)
    for _ in range(100):
        centers = np.stack([_unit(rng.normal(size=dim)) for _ in range(n_slots)])
        gaps = [
            float(np.sqrt(np.sum((centers[i] - centers[j]) ** 2)))
            for i in range(n_slots)
            for j in range(i + 1, n_slots)
        ]
        if min(gaps) >= 10.0 * sigma:
            break
    else:
        raise RuntimeError("could not separate blob centers; lower sigma or n_slots")

    entries = []  # (slot_name, value, vector, planted_label)
    for blob in range(n_slots):
        slot = f"slot_{blob}"
        minority = int(per_slot * minority_fraction)
        for k in range(per_slot):
            name = f"alt_{blob}" if k < minority else slot
            value = f"v{blob}_{k}"
            vector = centers[blob] + sigma * rng.normal(size=dim)
            entries.append((name, value, vector, blob))
    for k in range(n_outliers):
        vector = rng.uniform(-outlier_halfwidth, outlier_halfwidth, size=dim)
        entries.append((f"junk_{k}", f"odd_{k}", vector, -1))

    order = rng.permutation(len(entries))
    entries = [entries[i] for i in order]

    records = []
    texts = []
    vectors = []
    labels = []
    per_dialogue = 4
    for idx, (slot, value, vector, label) in enumerate(entries):
        dialogue_id = f"dlg_{idx // (per_dialogue * 3):03d}"
        turn_index = (idx // per_dialogue) % 3
        records.append((dialogue_id, turn_index, slot, value))
        texts.append(render_candidate_text(slot, value))
        vectors.append(vector)
        labels.append(label)

    # load_corpus re-sorts by (dialogue_id, turn_index, position); the
    # construction above is already in that order, so planted labels align
    # with candidate ids.
    gold_slots = [
        {
            "name": f"slot_{blob}",
            "values": [v for s, v, _, lab in entries if lab == blob],
        }
        for blob in range(n_slots)
    ]
    return PlantedCorpus(
        records=records,
        texts=texts,
        vectors=np.stack(vectors),
        labels=labels,
        slot_names=[f"slot_{i}" for i in range(n_slots)],
        gold_slots=gold_slots,
    )
