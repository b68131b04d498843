"""Rendering helpers for the pcs CLI: Rich tables and DOT export."""
