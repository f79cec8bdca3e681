"""An executable algebraic lambda calculus with span types."""

__version__ = "0.1.0"
