"""Orthogonal pilot book."""

import numpy as np


def dft_pilots(pilot_len):
    """DFT pilot book of pilot_len mutually orthogonal sequences.

    Row n is the sequence phi_n with entries exp(-j*2*pi*n*k/pilot_len),
    so every entry has unit modulus and Phi Phi^H = pilot_len * I.

    Parameters
    ----------
    pilot_len : int
        Number of sequences and symbols per sequence.

    Returns
    -------
    ndarray, shape (pilot_len, pilot_len), complex
    """
    n = np.arange(pilot_len)
    return np.exp(-2j * np.pi * np.outer(n, n) / pilot_len)
