"""Small-system laboratory for thermalization, scrambling and analog pulse synthesis."""

__version__ = "0.1.0"
