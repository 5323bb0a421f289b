#!/usr/bin/env python3
"""
Redescribe Engine Modules
Queries, redescriptions, metrics and the mining algorithms
"""
