"""Schema induction: encode candidates, cluster, name, and emit.

An induced schema is a list of named slot clusters plus the noise set;
together they partition the corpus candidate ids.  Cluster names come from
the majority slot name among members, which is what makes the generative
candidates directly readable as a schema.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .candidates import CandidateCorpus
from .embedding import EmbedderConfig, embed_batch, render_candidate_text
from .errors import EmptyCluster, SchemaValidationError
from .hdbscan import NOISE, ClusterParams, cluster


@dataclass
class SlotCluster:
    cluster_id: int
    name: str
    members: list[int]
    values: list[str]
    centroid: np.ndarray


@dataclass
class InducedSchema:
    clusters: list[SlotCluster]
    noise: list[int]
    params: ClusterParams
    embedder: dict

    def n_candidates(self) -> int:
        return len(self.noise) + sum(len(c.members) for c in self.clusters)


def name_cluster(member_slot_names: list[str]) -> str:
    """Modal slot name; ties break to the lexicographic minimum."""
    if not member_slot_names:
        raise EmptyCluster("cannot name a cluster with no members")
    counts = Counter(member_slot_names)
    return min(counts, key=lambda name: (-counts[name], name))


def centroid(vectors) -> np.ndarray:
    """Componentwise mean, accumulated in member order."""
    vectors = list(vectors)
    if not vectors:
        raise EmptyCluster("cannot take the centroid of no vectors")
    acc = np.zeros_like(np.asarray(vectors[0], dtype=np.float64))
    for vec in vectors:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != acc.shape:
            raise ValueError("centroid over mixed dimensions")
        acc = acc + vec
    return acc / len(vectors)


def induce_schema(
    corpus: CandidateCorpus,
    embedder: EmbedderConfig,
    params: ClusterParams,
    workers: int = 1,
) -> InducedSchema:
    """Render, embed, cluster, and name: corpus -> InducedSchema."""
    if not corpus.candidates:
        raise ValueError("cannot induce a schema from an empty corpus")
    texts = [
        render_candidate_text(c.slot_name, c.value) for c in corpus.candidates
    ]
    matrix = embed_batch(embedder, texts, workers=workers)
    labeling = cluster(matrix, params)

    members: dict[int, list[int]] = {}
    for candidate_id, label in enumerate(labeling.labels):
        members.setdefault(int(label), []).append(candidate_id)

    clusters = []
    for cluster_id in range(labeling.n_clusters):
        ids = members[cluster_id]
        slot_names = [corpus.candidates[i].slot_name for i in ids]
        values = [corpus.candidates[i].value for i in ids]
        clusters.append(
            SlotCluster(
                cluster_id=cluster_id,
                name=name_cluster(slot_names),
                members=ids,
                values=values,
                centroid=centroid(matrix[ids]),
            )
        )
    return InducedSchema(
        clusters=clusters,
        noise=members.get(NOISE, []),
        params=params,
        embedder=embedder.descriptor(),
    )


def write_schema(schema: InducedSchema, path) -> None:
    """Persist a schema as a single canonical JSON object."""
    obj = {
        "params": {
            "min_samples": schema.params.min_samples,
            "min_cluster_size": schema.params.min_cluster_size,
            "merge_epsilon": schema.params.merge_epsilon,
            "metric": schema.params.metric,
        },
        "embedder": schema.embedder,
        "clusters": [
            {
                "id": c.cluster_id,
                "name": c.name,
                "members": c.members,
                "values": c.values,
                "centroid": [float(x) for x in c.centroid],
            }
            for c in schema.clusters
        ],
        "noise": schema.noise,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, ensure_ascii=False)
        fh.write("\n")


def read_schema(path) -> InducedSchema:
    """Load and validate a schema file written by :func:`write_schema`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaValidationError("$", f"invalid JSON: {exc.msg}")
    for key in ("params", "embedder", "clusters", "noise"):
        if key not in obj:
            raise SchemaValidationError(key, "missing field")
    try:
        params = ClusterParams(**obj["params"])
    except (TypeError, ValueError) as exc:
        raise SchemaValidationError("params", str(exc))

    clusters = []
    seen: set[int] = set()
    for i, raw in enumerate(obj["clusters"]):
        where = f"clusters[{i}]"
        for key in ("id", "name", "members", "values", "centroid"):
            if key not in raw:
                raise SchemaValidationError(where, f"missing {key!r}")
        if raw["id"] != i:
            raise SchemaValidationError(
                f"{where}.id", f"cluster ids must be dense, got {raw['id']} at {i}"
            )
        members = raw["members"]
        if not members:
            raise SchemaValidationError(f"{where}.members", "cluster has no members")
        if any((not isinstance(m, int)) or isinstance(m, bool) for m in members):
            raise SchemaValidationError(f"{where}.members", "non-integer member id")
        if len(raw["values"]) != len(members):
            raise SchemaValidationError(
                f"{where}.values", "values not aligned with members"
            )
        overlap = seen.intersection(members)
        if overlap or len(set(members)) != len(members):
            raise SchemaValidationError(
                f"{where}.members", "member lists overlap"
            )
        seen.update(members)
        clusters.append(
            SlotCluster(
                cluster_id=raw["id"],
                name=raw["name"],
                members=list(members),
                values=list(raw["values"]),
                centroid=np.asarray(raw["centroid"], dtype=np.float64),
            )
        )
    noise = obj["noise"]
    if seen.intersection(noise) or len(set(noise)) != len(noise):
        raise SchemaValidationError("noise", "noise overlaps cluster members")
    return InducedSchema(
        clusters=clusters,
        noise=list(noise),
        params=params,
        embedder=dict(obj["embedder"]),
    )
