"""Covariant Lie derivatives, Kosmann lifts and Kaluza-Klein reduction on
sampled Taylor-jet fields."""

__version__ = "0.1.0"
