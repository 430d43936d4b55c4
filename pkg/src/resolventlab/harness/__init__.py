"""Experiment harness: configs, on-disk cache and named recipes."""

from .cache import Cache, cached_representation_counts, make_key
from .config import ExperimentConfig, run_sweep, substream
from .recipes import RECIPES, BudgetExceeded, Bundle, run_recipe, write_outputs

__all__ = ["BudgetExceeded", "Bundle", "Cache", "ExperimentConfig", "RECIPES", "cached_representation_counts", "make_key",
           "run_recipe", "run_sweep", "substream", "write_outputs"]
