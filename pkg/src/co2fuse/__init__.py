"""co2fuse: ground-level CO2 estimation from satellite soundings, station
observations and weather context, with weighted-KNN grid products and
feature attribution."""

__version__ = "0.1.0"

from .fusion import FEATURE_NAMES, N_FEATURES

__all__ = ["FEATURE_NAMES", "N_FEATURES", "__version__"]
