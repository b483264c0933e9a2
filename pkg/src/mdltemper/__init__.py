"""Tempered overfitting of minimum-description-length learners: curves, bounds, simulations."""
__version__ = "0.1.0"
