"""Rounding engines, generators, oracles and the experiment runner."""
