"""Chess reasoning data, evaluation tasks and verifiable rewards."""

__version__ = "0.1.0"
