"""Pilot codebook orthogonality and structure."""

import numpy as np
import pytest

from ductsim.pilots import dft_pilots


@pytest.mark.parametrize("tau", [2, 32, 64])
def test_gram_matrix_is_scaled_identity(tau):
    book = dft_pilots(tau)
    gram = book.conj().T @ book
    dev = np.max(np.abs(gram - tau * np.eye(tau)))
    assert dev < 1e-10 * tau


def test_two_symbol_book():
    book = dft_pilots(2)
    assert np.allclose(book[0], [1.0, 1.0])
    assert np.allclose(book[1], [1.0, -1.0])
    assert abs(np.vdot(book[0], book[1])) < 1e-12


def test_entries_have_unit_modulus():
    book = dft_pilots(5)
    assert np.allclose(np.abs(book), 1.0, atol=1e-12)


def test_rows_are_mutually_orthogonal_sequences():
    book = dft_pilots(7)
    gram = book @ book.conj().T
    assert np.allclose(gram, 7 * np.eye(7), atol=1e-10)
