"""Classical-to-quantum chaos transfer in optomechanical resonators."""

__version__ = "0.1.0"
