"""Bistable traveling waves, pulsating fronts, and spreading speeds for
monotone reaction-diffusion-type evolution systems."""

__version__ = "0.1.0"
