"""Perfect strategies for non-local games, their parallel composition and compression certificates."""

__version__ = "0.1.0"
