"""Perceptual-uncertainty injection and controller robustification for finite controller-plant models."""

__version__ = "0.1.0"
