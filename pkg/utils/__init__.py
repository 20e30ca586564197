"""Logging, CSV output and progress helpers."""
