"""Stochastic DAE simulator for frequency-quality studies on the IEEE 9-bus grid."""

__version__ = "0.1.0"
