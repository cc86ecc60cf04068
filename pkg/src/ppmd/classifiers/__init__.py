from .ann import Mlp
from .bayes import GaussianNaiveBayes
from .forest import DecisionTree, RandomForest
from .knn import Knn
from .model import (
    ANN,
    KNN,
    NB,
    RF,
    SVM,
    VARIANTS,
    ClassifierConfig,
    TrainedModel,
    load_model,
    predict,
    save_model,
    train_model,
)
from .normalize import NormalizationParams, normalize_apply, normalize_fit
from .svm import LinearSvm

__all__ = [
    "ANN", "KNN", "NB", "RF", "SVM", "VARIANTS",
    "ClassifierConfig", "TrainedModel", "train_model", "predict",
    "save_model", "load_model",
    "NormalizationParams", "normalize_fit", "normalize_apply",
    "LinearSvm", "Knn", "RandomForest", "DecisionTree",
    "GaussianNaiveBayes", "Mlp",
]
