"""
Test suite for ee-models.
"""
