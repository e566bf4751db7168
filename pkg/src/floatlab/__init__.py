"""floatlab: spectra, resolvents, truncated-domain dynamics and LQR feedback
for a floating solid on a viscous shallow-water channel."""

__version__ = "0.1.0"
