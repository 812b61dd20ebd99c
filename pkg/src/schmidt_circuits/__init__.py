"""Tensor-network-aware block-encoding circuits for data compression and hybrid classification."""

__version__ = "0.1.0"
