"""Frequency-compensated packing of CNN weight buffers into FPGA on-chip RAM."""

__version__ = "0.1.0"
