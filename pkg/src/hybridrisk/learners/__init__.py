"""Base classifiers emitting class-1 probabilities, plus Platt scaling."""

from .boosting import GradientBoostingModel, predict_gbt_proba, train_gbt
from .forest import RandomForestModel, predict_rf_proba, train_random_forest
from .logistic import LogisticModel, predict_logistic, train_logistic
from .platt import PlattCalibrator, apply_platt, fit_platt
from .svm import SvmModel, rbf_kernel, svm_decision_value, train_svm
from .tree import Tree, train_tree

_TYPES = {
    "logistic": LogisticModel,
    "svm": SvmModel,
    "random_forest": RandomForestModel,
    "gbt": GradientBoostingModel,
}


def model_from_dict(d):
    try:
        cls = _TYPES[d["type"]]
    except KeyError as exc:
        raise ValueError(f"unknown model record type {d.get('type')!r}") from exc
    return cls.from_dict(d)


class CalibratedSvm:
    """An SVM whose margins are mapped to probabilities by a Platt sigmoid."""

    def __init__(self, svm: SvmModel, platt: PlattCalibrator):
        self.svm = svm
        self.platt = platt

    def decision_function(self, X):
        return self.svm.decision_function(X)

    def predict_proba(self, X):
        return apply_platt(self.platt, self.svm.decision_function(X))


__all__ = [
    "CalibratedSvm", "GradientBoostingModel", "LogisticModel", "PlattCalibrator",
    "RandomForestModel", "SvmModel", "Tree", "apply_platt", "fit_platt", "model_from_dict",
    "predict_gbt_proba", "predict_logistic", "predict_rf_proba", "rbf_kernel",
    "svm_decision_value", "train_gbt", "train_logistic", "train_random_forest",
    "train_svm", "train_tree",
]
