"""Composite quantum instruments: order effects, Doeblin minorization and mixing certificates."""
from . import certify, channels, doeblin, lindblad, linalg, order, randmat
from .certify import clopper_pearson_lower, epsilon_hat, parse_counts_csv
from .channels import Channel, Instrument, LinearMap, is_cptp, lueders_instrument
from .doeblin import diamond_theorem_check, doeblin_constant, product_bound_check

__version__ = "0.1.0"

__all__ = [
    "Channel", "Instrument", "LinearMap", "certify", "channels", "clopper_pearson_lower",
    "diamond_theorem_check", "doeblin", "doeblin_constant", "epsilon_hat", "is_cptp",
    "linalg", "lindblad", "lueders_instrument", "order", "parse_counts_csv",
    "product_bound_check", "randmat",
]
