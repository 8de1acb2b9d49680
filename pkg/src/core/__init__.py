"""Domain types, parameter models and errors."""
