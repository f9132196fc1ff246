"""Fleet routing and coupled vessel-boom simulation for marine spill cleanup."""

__version__ = "0.1.0"
