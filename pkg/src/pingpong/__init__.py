"""Simulation and certification toolkit for the teleportation-based ping-pong test."""

__version__ = "0.1.0"
