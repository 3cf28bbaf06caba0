"""hoaxrank: label news URLs as fake or reliable from who shared them.

A bipartite reputation graph over items (URLs) and sources (users, sites)
drives two classifiers: a harmonic crowdsourcing fixpoint with an online
incremental variant, and a sparse logistic baseline over sharer and text
features. Ingestion, evaluation metrics, a synthetic generator, and a CLI
round out the pipeline.
"""

__version__ = "0.1.0"

from .engine import (  # noqa: F401
    Classification,
    EngineConfig,
    Label,
    SeedLabels,
    ingest_edge_online,
    reputation,
    run_fixpoint,
    seed,
    select_training_labels,
)
from .graph import (  # noqa: F401
    BetaState,
    Edge,
    EdgeKind,
    InsertOutcome,
    NodeId,
    NodeKind,
    ReputationGraph,
)
