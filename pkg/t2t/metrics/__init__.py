"""
Text-overlap and likelihood metrics.
"""
