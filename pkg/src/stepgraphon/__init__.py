"""Computations on step graphons."""
