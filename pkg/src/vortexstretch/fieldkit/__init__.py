"""Velocity fields: catalog, expression DSL, exact jets and FD cross-check."""

from .expr import parse_components, parse_expression, to_text
from .fields import (
    CATALOG,
    LINEAR_CATALOG,
    FieldJet,
    ScalarJet,
    VelocityField,
    catalog,
    default_fd_step,
    eval_jet,
    eval_jet_fd,
    eval_pressure,
    eval_velocity,
    load_field_file,
    parse_field,
)

__all__ = [
    "CATALOG",
    "LINEAR_CATALOG",
    "FieldJet",
    "ScalarJet",
    "VelocityField",
    "catalog",
    "default_fd_step",
    "eval_jet",
    "eval_jet_fd",
    "eval_pressure",
    "eval_velocity",
    "load_field_file",
    "parse_components",
    "parse_expression",
    "parse_field",
    "to_text",
]
