"""xaibench: model-reliability measurement via 3PL item response theory and
rank-stability benchmarking of feature-relevance explainers."""

__version__ = "0.1.0"
