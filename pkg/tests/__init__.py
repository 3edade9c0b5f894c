"""Test suite for FDS Reader MVP."""
