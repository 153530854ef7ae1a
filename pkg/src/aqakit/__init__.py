"""aqakit: forge audio QA datasets, train a toy frozen-decoder audio language
model through a staged curriculum, and score outputs with embedding-based
metrics and temporal probes."""

__version__ = "0.1.0"
