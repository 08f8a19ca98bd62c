"""Low-resolution pulse-radar gesture recognition pipeline.

Subpackages cover synthetic echo simulation, resolution degradation,
feature-mixing super-resolution, range-Doppler classification, joint
training regimes, and binary dataset/checkpoint persistence.
"""

__version__ = "0.1.0"
