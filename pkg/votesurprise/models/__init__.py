"""Domain models for votesurprise."""
