"""juliaspec: desk-scale numerics for polynomial Julia sets."""

__version__ = "0.1.0"
