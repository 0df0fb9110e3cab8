"""Core infrastructure: settings, logging, errors and linear algebra helpers."""
