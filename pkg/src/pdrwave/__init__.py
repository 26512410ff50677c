"""Constant-modulus waveform design by projection, descent and retraction on the complex circle."""

__version__ = "0.1.0"
