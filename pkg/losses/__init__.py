"""Reconstruction objectives with analytic gradients."""
from .weights import ABLATIONS, LossWeights
