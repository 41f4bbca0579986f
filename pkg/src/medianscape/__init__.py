"""Medians, maximal operators and Hajlasz gradients on finite metric measure spaces."""

from .errors import AuditError, ValidationError
from .space import (
    Ball,
    MetricMeasureSpace,
    StructureReport,
    build_space,
    estimate_structure,
    generate_space,
    radius_ladder,
    snowflake,
)

__all__ = [
    "AuditError",
    "Ball",
    "MetricMeasureSpace",
    "StructureReport",
    "ValidationError",
    "build_space",
    "estimate_structure",
    "generate_space",
    "radius_ladder",
    "snowflake",
]
