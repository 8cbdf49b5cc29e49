"""Hidden-unit logistic model for time-series classification."""
from .data import Dataset, FoldPlan, kfold, load_dataset, save_dataset, synth_order_task
from .inference import log_m, marginals, predict_distribution, predict_label
from .learning import cond_log_likelihood, gradient_batch, gradient_example, train_sgd, tune_lambda
from .model import HulmParams, Hyperparams, TimeSeries, energy, init_params
from .naive import NaiveParams, naive_predict, naive_train

__all__ = [
    "Dataset", "FoldPlan", "HulmParams", "Hyperparams", "NaiveParams", "TimeSeries",
    "cond_log_likelihood", "energy", "gradient_batch", "gradient_example", "init_params",
    "kfold", "load_dataset", "log_m", "marginals", "naive_predict", "naive_train",
    "predict_distribution", "predict_label", "save_dataset", "synth_order_task", "train_sgd",
    "tune_lambda",
]
