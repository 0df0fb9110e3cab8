"""Scenario files used by the tests."""
