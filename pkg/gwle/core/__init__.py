"""
Core configuration, errors and kernel metrics.
"""
