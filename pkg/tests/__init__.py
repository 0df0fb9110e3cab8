"""Tests for misbelief."""
