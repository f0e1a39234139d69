"""Retailer-supplier distribution chains as cooperative games."""

__version__ = "0.1.0"
