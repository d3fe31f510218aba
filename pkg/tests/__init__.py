"""Tests for votesurprise."""
