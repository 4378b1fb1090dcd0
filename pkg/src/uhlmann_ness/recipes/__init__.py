"""Bundled run configurations, one per reproduced study plus the self-test."""
