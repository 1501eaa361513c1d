"""Referring-expression communication model toolkit.

Thin Python surface over the C++ core: logical forms, tabular meaning
representations, the trained encoder/decoder, and linear message-space
operators.
"""

from ._core import (
    Form,
    MeaningTable,
    Model,
    RefsemError,
    Schema,
    WorldSample,
    agreement,
    config_digest,
    equivalent,
    evaluate,
    fit_binary_operator,
    fit_unary_operator,
    generate_world,
    load_operator,
    make_sample,
    parse_form,
    pca_project,
    print_form,
    sample_form,
    table_of_form,
)

__all__ = [
    "Form",
    "MeaningTable",
    "Model",
    "RefsemError",
    "Schema",
    "WorldSample",
    "agreement",
    "config_digest",
    "equivalent",
    "evaluate",
    "fit_binary_operator",
    "fit_unary_operator",
    "generate_world",
    "load_operator",
    "make_sample",
    "parse_form",
    "pca_project",
    "print_form",
    "sample_form",
    "table_of_form",
]
