"""Monte Carlo transport of passive tracers by heavy-tailed jump noise."""

__version__ = "0.1.0"
