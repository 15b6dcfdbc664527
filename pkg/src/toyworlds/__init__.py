"""Instructable tick-based toy worlds with an async play protocol, a
behavioral-cloning agent, and an evaluation harness."""

__version__ = "0.1.0"
