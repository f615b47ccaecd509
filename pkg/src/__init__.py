"""
Full-duplex MIMO downlink scheduling and queueing simulation.
"""

__version__ = "0.1.0"
