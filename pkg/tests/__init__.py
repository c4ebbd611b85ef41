"""
Test suite for the thresholdkit package.
"""
