"""Summary generation and client analyses over MiniFW programs."""
