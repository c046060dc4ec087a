"""Averages of Rankin-Selberg central derivatives over class group characters."""

__version__ = "0.1.0"
