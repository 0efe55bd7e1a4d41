"""Benchmark tests for robustlab."""
