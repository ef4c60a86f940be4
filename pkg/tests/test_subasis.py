import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import gell_mann_explicit
from puritycrit.errors import InvalidDimension
from puritycrit.subasis import casimir_check, expand, generators


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_orthogonality_and_trace(d):
    b = generators(d).matrices
    assert b.shape == (d * d, d, d)
    gram = np.einsum("aij,bji->ab", b, b)
    assert_allclose(gram, d * np.eye(d * d), atol=1e-12)
    for g in b[1:]:
        assert abs(np.trace(g)) < 1e-13
        assert_allclose(g, g.conj().T, atol=0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_casimir(d):
    assert casimir_check(d) <= 1e-12


def test_qubit_basis_is_pauli():
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1, -1])
    assert_allclose(generators(2).generators, np.array([x, y, z]), atol=0)


@pytest.mark.parametrize("d", [3, 4])
def test_span_matches_explicit_construction(d):
    # same linear span as the entry-by-entry Gell-Mann set, scaled by sqrt(d/2)
    ours = generators(d).generators.reshape(d * d - 1, -1)
    ref = np.array([g.ravel() for g in gell_mann_explicit(d)]) * np.sqrt(d / 2)
    overlap = ref.conj() @ ours.T / d
    assert_allclose(overlap @ overlap.conj().T, np.eye(d * d - 1), atol=1e-12)


def test_qutrit_squares_are_not_identity():
    # only the sum of squares is proportional to the identity when d > 2
    g = generators(3).generators
    assert any(np.max(np.abs(s @ s - np.eye(3))) > 0.1 for s in g)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_expand_roundtrip(d, rng):
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = h + h.conj().T
    c = expand(h)
    assert_allclose(c.imag, 0, atol=1e-13)
    assert_allclose(np.einsum("a,aij->ij", c, generators(d).matrices), h, atol=1e-12)


@pytest.mark.parametrize("d", [0, 1, 2.5])
def test_invalid_dimension(d):
    with pytest.raises(InvalidDimension):
        generators(d)
