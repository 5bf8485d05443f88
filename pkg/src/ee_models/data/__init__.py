"""
Dataset classes consumed by the model engines and their file formats.
"""

from .counts import CountSeries, aggregate_counts, validate_counts
from .history import (
    DistanceBasis,
    EventHistory,
    PairIndicator,
    build_event_history,
    from_table,
    summarize_history,
)
from .points import (
    PointPattern,
    aggregate_to_counts,
    build_point_pattern,
    min_separation,
    subset_pattern,
    summarize_pattern,
    untie,
    update_ranges,
)

__all__ = [
    "CountSeries",
    "DistanceBasis",
    "EventHistory",
    "PairIndicator",
    "PointPattern",
    "aggregate_counts",
    "aggregate_to_counts",
    "build_event_history",
    "build_point_pattern",
    "from_table",
    "min_separation",
    "subset_pattern",
    "summarize_history",
    "summarize_pattern",
    "untie",
    "update_ranges",
    "validate_counts",
]
