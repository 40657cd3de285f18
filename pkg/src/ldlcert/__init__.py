"""Certify Bell nonlocality of postselected data under limited-detection and measurement-dependence assumptions."""

__version__ = "0.1.0"
