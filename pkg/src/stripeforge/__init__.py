"""Numerical toolkit for a diffuse-interface stripe-forming energy on periodic tori."""

__version__ = "0.1.0"

from .core import Params, ScalarField, Profile1D, make_stripe_field, make_random_field

__all__ = [
    "Params",
    "ScalarField",
    "Profile1D",
    "make_stripe_field",
    "make_random_field",
]
