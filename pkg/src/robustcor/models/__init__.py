from .learners import DEFAULTS, KINDS, ClassifierSpec, FittedModel, fit, predict_proba
from .search import expand_grid, grid_search_cv, stratified_folds
from .table import PredictionTable, check_aligned, ingest_predictions, table_from_predictions, write_predictions

__all__ = [
    "DEFAULTS",
    "KINDS",
    "ClassifierSpec",
    "FittedModel",
    "PredictionTable",
    "check_aligned",
    "expand_grid",
    "fit",
    "grid_search_cv",
    "ingest_predictions",
    "predict_proba",
    "stratified_folds",
    "table_from_predictions",
    "write_predictions",
]
