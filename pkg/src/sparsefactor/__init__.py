"""Sparse latent-factor regression for single and multi-assay data."""

from .estimators import MultiAssaySFMRegressor, SFMRegressor

__version__ = "0.1.0"

__all__ = ["SFMRegressor", "MultiAssaySFMRegressor", "__version__"]
