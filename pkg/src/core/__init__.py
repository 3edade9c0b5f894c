"""Eigenstates, master equation and disorder for giant atoms in a waveguide."""
