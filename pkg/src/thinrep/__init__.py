"""Representation of integers by linear forms over thin matrix groups."""
