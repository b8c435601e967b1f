"""Export CPSF score files from pretrained masked language models."""

from .format import (
    HEADER,
    MAGIC,
    NONE_TRUTH,
    SUM_TOL,
    VERSION,
    RowValidationError,
    validate_labels,
    validate_row,
    write_score_file,
)
from .jobs import (
    ExportJob,
    ExportSummary,
    ModelLoadError,
    TaggingModel,
    UnsupportedOperationError,
    export_mlm_scores,
    export_pos_scores,
    read_masked_sentences,
    read_token_lines,
)

__version__ = "0.1.0"

__all__ = [
    "HEADER",
    "MAGIC",
    "NONE_TRUTH",
    "SUM_TOL",
    "VERSION",
    "RowValidationError",
    "validate_labels",
    "validate_row",
    "write_score_file",
    "ExportJob",
    "ExportSummary",
    "ModelLoadError",
    "TaggingModel",
    "UnsupportedOperationError",
    "export_mlm_scores",
    "export_pos_scores",
    "read_masked_sentences",
    "read_token_lines",
    "__version__",
]
