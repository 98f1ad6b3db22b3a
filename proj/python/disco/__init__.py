"""Discourse-marker sentence-pair toolkit (C++ core)."""

from ._core import (
    AnalysisError,
    NumericError,
    ParseError,
    StructureError,
    align,
    balance,
    confusion,
    extract,
    grad_check,
    levenshtein,
    marker_set,
    normalized_levenshtein,
    parse_conllu,
    per_class_prf,
    run,
    split,
)

__version__ = "0.1.0"
