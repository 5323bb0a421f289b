#!/usr/bin/env python3
"""
Redescribe Tree Modules
Multi-target predictive clustering trees, forests and rule extraction
"""
