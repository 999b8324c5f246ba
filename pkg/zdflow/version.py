# -*- coding: utf-8 -*-
"""
Contains the package version information
"""

__version__ = "0.1"
