"""One-shot coding over acyclic discrete networks."""

__version__ = "0.1.0"
