"""
Tests package for the EIT ladder simulator.
"""
