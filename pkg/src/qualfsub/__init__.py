"""Qualified polymorphic lambda calculi: a checker, evaluators and oracles."""

__version__ = "0.1.0"
