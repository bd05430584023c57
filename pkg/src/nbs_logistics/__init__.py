"""Incentive design for commercial participation in space infrastructure
deployment campaigns."""

__version__ = '0.1.0'
