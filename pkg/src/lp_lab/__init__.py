"""LP decoding of LDPC codes and the dual-witness toolkit around it."""

__version__ = "0.1.0"
