"""Python access to the aquadapt core."""

from ._aquadapt import (
    AquadaptError,
    bleu4,
    bm25_scores,
    clean_text,
    evaluate,
    judge_report,
    rouge_l,
    rouge_n,
    run_all,
    tokenize,
)

__all__ = [
    "AquadaptError",
    "bleu4",
    "bm25_scores",
    "clean_text",
    "evaluate",
    "judge_report",
    "rouge_l",
    "rouge_n",
    "run_all",
    "tokenize",
]
