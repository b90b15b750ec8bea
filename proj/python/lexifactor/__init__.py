"""Python access to the lexifactor C++ core."""

from ._core import (
    align_components,
    assign_from_accuracy,
    build_prompt,
    decomposition_json,
    default_lexicon,
    factor_decomposition,
    fit_lasso,
    jacobi_svd,
    lambda_max,
    render_report_table,
    rescale_logprob,
    run_cli,
    synthesize,
    toy_tokenize,
)

TRAITS = ("EXT", "AGR", "CON", "NEU", "OPN")

__all__ = [
    "TRAITS",
    "align_components",
    "assign_from_accuracy",
    "build_prompt",
    "decomposition_json",
    "default_lexicon",
    "factor_decomposition",
    "fit_lasso",
    "jacobi_svd",
    "lambda_max",
    "render_report_table",
    "rescale_logprob",
    "run_cli",
    "synthesize",
    "toy_tokenize",
]
