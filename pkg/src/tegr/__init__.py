"""Goal recognition over temporally extended goals in FOND planning domains."""

__version__ = "0.1.0"
