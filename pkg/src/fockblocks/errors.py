"""Shared exception types."""


class BudgetError(Exception):
    """An enumeration request exceeds the hard-coded combinatorial budget."""


class ConfigError(Exception):
    """A model configuration is inadmissible or cannot be parsed."""
