"""tandemsim: desk-scale deterministic simulator for human-robot collaboration."""

__version__ = "0.1.0"
