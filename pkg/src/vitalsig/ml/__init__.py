"""Feature assembly, classifiers, cross-validation and fusion."""

from .cv import EvalReport, cross_validate, default_grid, grid_search_cv, stratified_group_folds
from .dataset import MODES, RPPG_FEATURES, Dataset, SegmentRecord, assemble, split_blocks
from .fusion import late_fuse
from .model import TrainedModel, train, train_rf, train_svm
from .svm import SVM
from .tree import DecisionTree, RandomForest, gini_impurity

__all__ = [
    "DecisionTree", "Dataset", "EvalReport", "MODES", "RPPG_FEATURES", "RandomForest", "SVM",
    "SegmentRecord", "TrainedModel", "assemble", "cross_validate", "default_grid",
    "gini_impurity", "grid_search_cv", "late_fuse", "split_blocks", "stratified_group_folds",
    "train", "train_rf", "train_svm",
]
