"""Online learning of a common price and per-market marketing costs from bandit feedback."""

__version__ = "0.1.0"
