"""Language models that mix count-based and one-hot word distributions."""

__version__ = "0.1.0"
