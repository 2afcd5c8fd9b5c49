"""boxlab: human-drawn bounding boxes, AI-generated labels, human verdicts.

Humans mark what to label (a box, or the whole image when nothing is
boxed), a vision model says what it is, and humans accept, correct, or
flag the result. Projects persist to plain-text directories; evaluation,
agreement, and cost reporting close the loop.
"""

from .core import (
    Actor,
    Annotation,
    AnnotationEvent,
    AnnotationStatus,
    BoundingBox,
    EventKind,
    Region,
    apply_event,
    create_annotation,
    replay,
    validate_box,
)
from .errors import BoxlabError
from .evaluation import (
    AccuracyReport,
    ConfusionMatrix,
    CostParams,
    CostReport,
    agreement_stats,
    compute_accuracy,
    confusion_matrix,
    cost_roi,
    evaluate_annotations,
)
from .images import ImageRecord, ImageStore, OverlayStyle, crop_region, draw_overlay
from .labels import ParsedLabel, parse_label_text
from .pipeline import (
    LiveProvider,
    MockProvider,
    SubmissionMode,
    TaskConfig,
    build_prompt,
    label_batch,
    request_labels,
)
from .store import Project, export_coco, import_boxes, load, save
from .taxonomy import MatchPolicy, MatchResult, Taxonomy, assign_tier, match, normalize

__version__ = "0.1.0"

__all__ = [
    "Actor",
    "Annotation",
    "AnnotationEvent",
    "AnnotationStatus",
    "BoundingBox",
    "EventKind",
    "Region",
    "apply_event",
    "create_annotation",
    "replay",
    "validate_box",
    "BoxlabError",
    "AccuracyReport",
    "ConfusionMatrix",
    "CostParams",
    "CostReport",
    "agreement_stats",
    "compute_accuracy",
    "confusion_matrix",
    "cost_roi",
    "evaluate_annotations",
    "ImageRecord",
    "ImageStore",
    "OverlayStyle",
    "crop_region",
    "draw_overlay",
    "ParsedLabel",
    "parse_label_text",
    "LiveProvider",
    "MockProvider",
    "SubmissionMode",
    "TaskConfig",
    "build_prompt",
    "label_batch",
    "request_labels",
    "Project",
    "export_coco",
    "import_boxes",
    "load",
    "save",
    "MatchPolicy",
    "MatchResult",
    "Taxonomy",
    "assign_tier",
    "match",
    "normalize",
    "__version__",
]
