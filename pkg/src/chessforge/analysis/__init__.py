"""Trace grounding and predictive-complexity analysis."""

from .traces import (
    ExtractedTrace,
    ReferencedAccuracy,
    TraceExtractionError,
    aggregate_accuracy,
    extract_trace_llm,
    extract_trace_pattern,
    parse_extraction_reply,
    referenced_accuracy,
)
from .triviality import (
    DEFAULT_THRESHOLD,
    TokenProbRecord,
    format_table,
    iter_prob_log,
    move_quality_histogram,
    triviality_fraction,
    triviality_grouped,
)

__all__ = [name for name in dir() if not name.startswith("_")]
