"""Streaming vandalism scorer for Wikidata-style revision feeds."""

__version__ = "0.1.0"
