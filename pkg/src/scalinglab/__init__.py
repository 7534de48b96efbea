"""Exact samplers, path encodings and limit-law checks for random trees and graphs."""

__version__ = "0.1.0"
