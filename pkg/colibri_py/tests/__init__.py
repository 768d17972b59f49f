"""Test cases for the colibri_py package."""
