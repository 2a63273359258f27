"""Stacking-ensemble workbench: build, wrangle, prune, and compare classifier stacks."""

__version__ = "0.1.0"
