"""Seed-dataset model, automatic QA metrics, splitting, and human-mark aggregation."""

from .dataset import AnswerSpan, QAItem, load_qa_dataset, save_qa_dataset
from .marks import EvalMark, FamilyTable, aggregate_marks
from .metrics import evaluate_qa, exact_match, normalize_answer, token_f1
from .split import SplitResult, disease_disjoint_split

__all__ = [
    "AnswerSpan",
    "QAItem",
    "load_qa_dataset",
    "save_qa_dataset",
    "EvalMark",
    "FamilyTable",
    "aggregate_marks",
    "evaluate_qa",
    "exact_match",
    "normalize_answer",
    "token_f1",
    "SplitResult",
    "disease_disjoint_split",
]
