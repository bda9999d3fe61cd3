"""Configuration management for the qcong verification engine."""
