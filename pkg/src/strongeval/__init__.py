"""Frame-level evaluation sets, d-prime / lwlrap metrics and weak/strong mixing
manifests for temporally-strong audio event labels."""

__version__ = "0.1.0"

from .analysis import Contingency2x2, cross_label_odds, odds_ratio, odds_table, priors_scatter
from .config import Settings, load_settings
from .corpus import (
    ClipId,
    Corpus,
    CorpusKind,
    LabeledSegment,
    Polarity,
    WeakAnnotation,
    build_diffuse,
    class_priors,
    decode_segment_id,
    merge_class_segments,
    parse_strong_tsv,
    parse_weak_csv,
    select_balanced_subset,
)
from .errors import ParseError, StrongEvalError, UndefinedMetricError, UnknownClassError, ValidationError
from .framing import (
    FrameGrid,
    FrameLabelSet,
    FramePolarity,
    complementary_negatives,
    frame_clip,
    is_frame_positive,
    make_grid,
    project_explicit_negatives,
    project_positives,
    sample_crop,
)
from .manifest import MixSpec, build_subsets, mix_manifest
from .metrics import WeightedSamples, dprime, evaluate, lwlrap, pool_negatives, probit, roc_auc
from .ontology import Ontology, ancestors, collapse_music, load_ontology, smear_labels

__all__ = [
    "ClipId",
    "Contingency2x2",
    "Corpus",
    "CorpusKind",
    "FrameGrid",
    "FrameLabelSet",
    "FramePolarity",
    "LabeledSegment",
    "MixSpec",
    "Ontology",
    "ParseError",
    "Polarity",
    "Settings",
    "StrongEvalError",
    "UndefinedMetricError",
    "UnknownClassError",
    "ValidationError",
    "WeakAnnotation",
    "WeightedSamples",
    "ancestors",
    "build_diffuse",
    "build_subsets",
    "class_priors",
    "collapse_music",
    "complementary_negatives",
    "cross_label_odds",
    "decode_segment_id",
    "dprime",
    "evaluate",
    "frame_clip",
    "is_frame_positive",
    "load_ontology",
    "load_settings",
    "lwlrap",
    "make_grid",
    "merge_class_segments",
    "mix_manifest",
    "odds_ratio",
    "odds_table",
    "parse_strong_tsv",
    "parse_weak_csv",
    "pool_negatives",
    "priors_scatter",
    "probit",
    "project_explicit_negatives",
    "project_positives",
    "roc_auc",
    "sample_crop",
    "select_balanced_subset",
    "smear_labels",
]
