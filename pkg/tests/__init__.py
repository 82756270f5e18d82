"""
kac-roots - Test Suite
Unit tests for the kac-roots project.
"""
