"""Class-fair online bipartite matching: instances, algorithms, metrics and experiments."""

__version__ = "0.1.0"
