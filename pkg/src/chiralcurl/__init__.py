"""Discrete single-curl eigenstructure for chiral (Pasteur) media."""

__version__ = "0.1.0"
