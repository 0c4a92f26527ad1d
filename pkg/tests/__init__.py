"""Test package for hvac_maac."""
