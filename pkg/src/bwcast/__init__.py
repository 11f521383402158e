"""Multivariate time-series forecasting with LSTM networks, automatic lag selection,
hyperparameter search and walk-forward evaluation."""

from importlib import resources

from .automal import AutomalConfig, LagRecommendation, LagSelector, acf, adf_test, automal, find_peaks
from .estimator import LSTMForecaster
from .evaluate import mae, persistence_forecast, repeated_evaluation, rmse, walk_forward
from .exceptions import BwcastError, ConfigError, DataError, ModelFileError, StageError
from .hyperopt import SearchSpace, bayesian_opt, default_space, random_search
from .modelio import load_model, save_model
from .preprocess import Normalizer, make_supervised, train_test_split, window_panel
from .runner import RunConfig, parse_config, run_pipeline
from .timeseries import Dataset, ParallelDataset, Series, assemble_parallel, load_csv, write_csv

__version__ = "0.1.0"


def example_csv_path():
    """Path of the bundled synthetic dataset (period-12 sine target with small noise plus one cosine feature, 400 rows)."""
    return resources.files(__name__).joinpath("data/sine12.csv")


__all__ = [
    "AutomalConfig", "LagRecommendation", "LagSelector", "acf", "adf_test", "automal", "find_peaks",
    "LSTMForecaster", "mae", "persistence_forecast", "repeated_evaluation", "rmse", "walk_forward",
    "BwcastError", "ConfigError", "DataError", "ModelFileError", "StageError",
    "SearchSpace", "bayesian_opt", "default_space", "random_search", "load_model", "save_model",
    "Normalizer", "make_supervised", "train_test_split", "window_panel",
    "RunConfig", "parse_config", "run_pipeline",
    "Dataset", "ParallelDataset", "Series", "assemble_parallel", "load_csv", "write_csv",
    "example_csv_path",
]
