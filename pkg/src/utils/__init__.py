#!/usr/bin/env python3
"""
Redescribe Utility Modules
Dataset loading, configuration parsing, seeding, tracing and synthetic data
"""
