"""Monte-Carlo simulator for CoMP and NOMA implementation order in downlink ultra-dense networks."""

__version__ = "0.1.0"
