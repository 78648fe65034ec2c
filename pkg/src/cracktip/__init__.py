"""Numerical toolkit for crack-tip asymptotics of the Mumford-Shah functional."""

__version__ = "0.1.0"
