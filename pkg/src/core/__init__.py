#!/usr/bin/env python3
"""
Redescribe Core Modules
Command-line controller and run reporting
"""
