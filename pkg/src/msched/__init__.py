"""Approximation algorithms for scheduling malleable jobs with speed-based processing times."""
