"""
Geographically weighted local linear estimation of varying-coefficient models.
"""

__version__ = "1.0.0"
