"""Channel-knowledge-map beam alignment simulator."""

__version__ = "0.1.0"
