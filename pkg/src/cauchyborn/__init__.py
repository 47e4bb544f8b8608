"""Simulator for detection on Cauchy surfaces.

Subpackages: ``geometry`` (continuum surfaces and boosts), ``lattice``
(brickwork circuit model) and ``detection`` (detection processes and
squeeze bounds).  ``configspace`` holds the configuration-space algebra
shared by all of them.
"""
__version__ = "0.1.0"
