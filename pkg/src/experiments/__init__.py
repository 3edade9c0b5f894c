"""Scripted protocols and dataset reproduction."""
