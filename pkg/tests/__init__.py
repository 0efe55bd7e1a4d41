"""Test suite for robustlab."""
