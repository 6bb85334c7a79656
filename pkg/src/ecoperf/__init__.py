"""ecoperf: benchmarking engine for open-source ecosystem analytics.

Event logs become monthly stores; stores become collaboration graphs,
activity and influence indices, and task benchmarks (link-prediction
recommendation, series completion, bot classification, anomaly detection)
with leaderboard export and a read-only service.
"""

from .bench import (
    BenchmarkRegistry,
    BenchmarkSpec,
    DatasetRef,
    Leaderboard,
    ModelRef,
    RunResult,
    TASK_CATALOG,
    build_leaderboard,
    export_leaderboard,
)
from .botdetect import (
    AccountFeatures,
    ClassificationReport,
    ClassifierModel,
    FEATURE_NAMES,
    eval_classification,
    extract_features,
    predict,
    train_classifier,
)
from .errors import EcoperfError, ParseError
from .events import Event, EventStore, IngestReport, parse_event
from .graph import (
    CollabGraph,
    build_bipartite,
    build_repo_topic,
    merge_relation_topic,
    project_repo_relation,
    read_edge_list,
    write_edge_list,
)
from .indices import (
    EventWeightConfig,
    IndexResult,
    RankResult,
    compute_activity,
    compute_degree_centrality,
    compute_openrank,
    compute_pagerank,
    default_weights,
)
from .linkpred import (
    EdgeSplit,
    LinkPredReport,
    evaluate_auc,
    rank_candidates,
    register_scorer,
    score_pair,
    split_edges,
)
from .tseries import (
    AnomalyDetector,
    CompletionScore,
    MetricMatrix,
    apply_mask,
    build_metric_matrix,
    detect_anomalies,
    evaluate_completion,
    impute,
)

__version__ = "0.1.0"
