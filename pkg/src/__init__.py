#!/usr/bin/env python3
"""
Redescribe - Multi-view Redescription Mining Engine
Pairwise tree-based mining, cross-view completion and set selection
"""

__version__ = "1.0.0"
__author__ = "Redescribe Development Team"
__license__ = "MIT"
