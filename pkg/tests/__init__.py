"""Test suite for the DLC privacy tradeoff toolkit."""
