"""Random-input circuit equivalence checking and variational circuit redesign."""

__version__ = "0.1.0"
