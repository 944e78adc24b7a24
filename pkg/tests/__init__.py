"""Decoder tests."""
