from .boosting import BoostedModel, gbt_fit, gbt_predict_proba, grad_hess, softmax_logloss
from .forest import RandomForestModel, rf_fit, rf_predict
from .naive_bayes import NaiveBayesModel, nb_fit, nb_predict_proba
from .tree import DecisionTree, gini, leaf_weight, split_gain, tree_fit
from ._common import softmax

MODEL_TYPES = {
    "nb": NaiveBayesModel,
    "rf": RandomForestModel,
    "gbt": BoostedModel,
}


def model_from_dict(model_type, d):
    try:
        cls = MODEL_TYPES[model_type]
    except KeyError:
        raise ValueError(f"unknown model type {model_type!r}") from None
    return cls.from_dict(d)


def fit_model(model_type, matrix, params=None, classes=None):
    """Dispatch to the fit function for ``model_type`` with keyword ``params``."""
    params = dict(params or {})
    if model_type == "nb":
        return nb_fit(matrix, classes=classes, **params)
    if model_type == "rf":
        return rf_fit(matrix, classes=classes, **params)
    if model_type == "gbt":
        return gbt_fit(matrix, classes=classes, **params)
    raise ValueError(f"unknown model type {model_type!r}")


__all__ = [
    "BoostedModel", "DecisionTree", "NaiveBayesModel", "RandomForestModel",
    "fit_model", "gbt_fit", "gbt_predict_proba", "gini", "grad_hess", "leaf_weight",
    "model_from_dict", "nb_fit", "nb_predict_proba", "rf_fit", "rf_predict",
    "softmax", "softmax_logloss", "split_gain", "tree_fit",
]
