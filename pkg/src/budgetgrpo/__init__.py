"""GRPO with curriculum token budgets on a toy arithmetic reasoning task."""

__version__ = "0.1.0"
