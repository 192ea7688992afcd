"""Configuration, serialization, studies and the command-line interface."""
