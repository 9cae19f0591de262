"""Exact time-dependent photoemission from a flat metal surface."""
