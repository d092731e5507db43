"""Spiking neuroevolution with resistive-memory synapses."""

__version__ = "0.1.0"
