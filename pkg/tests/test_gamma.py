import itertools

import numpy as np
import pytest

from qiral import ir
from qiral.vm import GAMMA, GAMMA5, IDENTITY_SPIN, gamma


@pytest.mark.parametrize("mu,nu", list(itertools.product(ir.DIRECTIONS, repeat=2)))
def test_clifford_anticommutator(mu, nu):
    g = GAMMA
    want = 2 * IDENTITY_SPIN if mu == nu else np.zeros((4, 4))
    assert np.array_equal(g[mu] @ g[nu] + g[nu] @ g[mu], want)


@pytest.mark.parametrize("d", ir.DIRECTIONS)
def test_gammas_hermitian_and_anticommute_with_gamma5(d):
    g = gamma(d)
    assert np.array_equal(g, g.conj().T)
    assert np.array_equal(g @ GAMMA5, -GAMMA5 @ g)


def test_gamma5_is_product_and_involution():
    prod = GAMMA["x"] @ GAMMA["y"] @ GAMMA["z"] @ GAMMA["t"]
    assert np.array_equal(prod, GAMMA5)
    assert np.array_equal(GAMMA5 @ GAMMA5, IDENTITY_SPIN)
    assert np.array_equal(GAMMA5, np.diag([1, 1, -1, -1]))


def test_entries_are_exact_gaussian_integers():
    for m in (*GAMMA.values(), GAMMA5):
        assert np.array_equal(m.real, np.round(m.real))
        assert np.array_equal(m.imag, np.round(m.imag))


def test_tables_are_read_only():
    with pytest.raises(ValueError):
        GAMMA5[0, 0] = 3


def test_lookup_by_signed_direction_ignores_sign():
    assert gamma(ir.Dir("z", -1)) is GAMMA["z"]
