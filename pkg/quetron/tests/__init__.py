"""Test suite for quetron."""
