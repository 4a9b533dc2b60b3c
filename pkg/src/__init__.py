"""
DLC Privacy Tradeoff Package

Simulation of direct load control under reduced smart-meter sampling and
inferential-privacy bounds for the data those meters report.
"""

__version__ = "1.0.0"
__author__ = "DLC Privacy Tradeoff"
