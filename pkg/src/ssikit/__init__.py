"""Slot schema induction toolkit.

Pipeline: load slot-value candidates, embed them, cluster with in-house
density-based hierarchical clustering, name the clusters, then score the
induced schema against a gold schema.
"""

from .candidates import (
    CandidateCorpus,
    DialogueTurn,
    ReplayBackend,
    RemoteGeneratorBackend,
    SlotValueCandidate,
    fetch_state_update,
    load_corpus,
    parse_state_update,
    parse_state_update_lenient,
    serialize_state_update,
)
from .embedding import (
    EmbedderConfig,
    cosine_similarity,
    embed_batch,
    hashed_ngram_embed,
    render_candidate_text,
)
from .evaluation import (
    AnnotationSet,
    EvalReport,
    GoldSchema,
    GoldSlot,
    SlotMapping,
    annotation_metrics,
    evaluate_schema,
    fuzzy_match,
    load_gold_schema,
    map_clusters,
    slot_metrics,
    value_metrics,
)
from .hdbscan import (
    NOISE,
    ClusterParams,
    CondensedTree,
    Labeling,
    MstEdge,
    cluster,
    condensed_hierarchy,
    core_distances,
    minimum_spanning_tree,
    mutual_reachability,
    select_clusters,
)
from .induction import (
    InducedSchema,
    SlotCluster,
    centroid,
    induce_schema,
    name_cluster,
    read_schema,
    write_schema,
)

__version__ = "0.1.0"
