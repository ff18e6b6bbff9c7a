# src/__init__.py
"""
Package for nls-lifespan-lab.
"""
