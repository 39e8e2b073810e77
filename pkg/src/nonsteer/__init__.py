"""Certified non-steerability borders for two-qubit states from local channels on the steering party."""

__version__ = "0.1.0"
