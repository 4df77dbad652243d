"""Pre-compensated NFDM transmission laboratory."""
