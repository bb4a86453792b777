"""Randomized product formulas for Hamiltonian simulation.

Builds qDRIFT and (randomly permuted) Suzuki product formulas, realizes them
exactly at desk scale, and checks their errors against closed-form bias and
concentration bounds.
"""
__version__ = "0.1.0"
