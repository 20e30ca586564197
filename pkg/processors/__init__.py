"""Subcommand processors for the pipeline runner."""
