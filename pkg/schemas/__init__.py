"""Pydantic models for instances, engine configuration and results."""
