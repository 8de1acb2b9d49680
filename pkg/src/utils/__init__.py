"""Logging, seed streams and the binary file envelope."""
