"""Settings, suites and experiment configuration."""
