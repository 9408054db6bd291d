"""
Disentanglement metrics: MIG and DCI Disentanglement
"""

from .dci import ImportanceMatrix, dci_disentanglement, dci_importance
from .evaluate import (
    MATRIX_LEVELS,
    EvaluationScores,
    evaluate_representation,
    model_traversal_matrices,
    representation_table,
)
from .mig import MigResult, RepresentationTable, discretize, mig_score, mutual_information

__all__ = [
    "MATRIX_LEVELS",
    "EvaluationScores",
    "ImportanceMatrix",
    "MigResult",
    "RepresentationTable",
    "dci_disentanglement",
    "dci_importance",
    "discretize",
    "evaluate_representation",
    "mig_score",
    "model_traversal_matrices",
    "mutual_information",
    "representation_table",
]
