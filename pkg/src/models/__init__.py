"""Pydantic models for series objects, registry entries and reports."""
