"""Zero-shot evaluation of unsupervised spoken-language models."""

__version__ = "0.1.0"
