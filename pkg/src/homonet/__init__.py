"""Homophily-driven synthetic directed social networks and their evaluation."""

__version__ = "0.1.0"
