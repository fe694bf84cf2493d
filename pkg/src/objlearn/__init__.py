"""Online learning of linear objective functions from observed decisions."""

__version__ = "0.1.0"
