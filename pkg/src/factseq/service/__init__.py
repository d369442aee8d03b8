"""HTTP service exposing the toolkit operations."""
