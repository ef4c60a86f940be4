import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from oracles import ginibre_state, pure_state
from puritycrit.corrtensor import corr_tensor, full_support
from puritycrit.criteria import (
    INAPPLICABLE,
    SATISFIED,
    VIOLATED,
    bell_partial_sum,
    best_bell_partial_sum,
    chsh_horodecki,
    entropic_form,
    gme_bound,
    gme_three_qudit_check,
    ksep_delta_tilde,
    ksep_threshold,
    ksep_verdict,
    random_frame,
    rotation_to_su2,
    t_diagonal_form,
    t_diagonalize,
)
from puritycrit.errors import Inapplicable, InvalidFrame
from puritycrit.matcore import DensityMatrix, PartitionScheme, set_partitions
from puritycrit.puritylink import purity_map_from_values, reduced_purities
from puritycrit.states import bell_state, maximally_mixed, noisy_ghz, pure_state as make_pure, tensor, werner
from puritycrit.subasis import generators

P01 = PartitionScheme.parse("0|1")


def test_bell_report():
    rep = ksep_verdict(bell_state("phi+"), P01)
    assert rep.tnorm2 == pytest.approx(3.0)
    assert rep.threshold == 1
    assert rep.delta_tilde == pytest.approx(-2.0)
    assert rep.verdicts == {"ksep": VIOLATED, "norm_form": VIOLATED,
                            "chsh": VIOLATED, "gme3": INAPPLICABLE}
    assert rep.entangled


def test_maximally_mixed_report():
    rep = ksep_verdict(maximally_mixed((2, 2)), P01)
    assert rep.tnorm2 == pytest.approx(0.0, abs=1e-15)
    assert rep.verdicts["ksep"] == SATISFIED
    assert rep.verdicts["chsh"] == SATISFIED


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (2, 2, 2)])
def test_maximally_mixed_spread_term(dims):
    # every reduction is maximally mixed, so the sum collapses to prod(d_l - 1)
    rho = maximally_mixed(dims)
    for p in set_partitions(len(dims)):
        pm = reduced_purities(rho, p)
        assert ksep_delta_tilde(pm) == pytest.approx(ksep_threshold(p.block_dims(dims)), abs=1e-12)


def test_threshold_product():
    assert ksep_threshold((2, 2, 2)) == 1
    assert ksep_threshold((3, 4)) == 6


def test_entropic_form_equals_spread_term(rng):
    rho = DensityMatrix((2, 3), ginibre_state(6, rng))
    pm = reduced_purities(rho, P01)
    assert entropic_form(pm) == pytest.approx(ksep_delta_tilde(pm), abs=1e-13)


def test_product_states_satisfy(rng):
    for dims in [(2, 2), (2, 3), (3, 3)]:
        a = make_pure(rng.standard_normal(dims[0]) + 0j, (dims[0],))
        b = DensityMatrix((dims[1],), ginibre_state(dims[1], rng))
        rep = ksep_verdict(tensor(a, b), P01)
        assert rep.delta_tilde >= -1e-12
        assert rep.verdicts["ksep"] == SATISFIED


def test_werner_delta_closed_form():
    for w in np.linspace(0, 1, 21):
        rep = ksep_verdict(werner(w), P01)
        assert rep.delta_tilde == pytest.approx(1 - 3 * w * w, abs=1e-13)


def test_gme_bounds():
    assert gme_bound(2) == pytest.approx(3.0)
    assert gme_bound(3) == pytest.approx(128 / 27)


def test_ghz3_gme():
    res = gme_three_qudit_check(noisy_ghz(3, 1.0), PartitionScheme.finest(3))
    assert res.tnorm2 == pytest.approx(4.0)
    assert res.bound == 3.0
    assert res.verdict == VIOLATED
    # the purity expression of the same norm
    assert res.purity_lhs == pytest.approx(4.0)


def test_gme_purity_form_matches_norm(rng):
    rho = DensityMatrix((3, 3, 3), ginibre_state(27, rng))
    res = gme_three_qudit_check(rho, PartitionScheme.finest(3))
    assert res.purity_lhs == pytest.approx(res.tnorm2, abs=1e-11)
    assert res.verdict == SATISFIED


def test_gme_inapplicable():
    with pytest.raises(Inapplicable):
        gme_three_qudit_check(noisy_ghz(3, 1.0), PartitionScheme.parse("0,1|2"))
    with pytest.raises(Inapplicable):
        gme_three_qudit_check(maximally_mixed((2, 3, 2)), PartitionScheme.finest(3))


def test_chsh_werner_edges():
    lo = chsh_horodecki(werner(0.7), P01)
    hi = chsh_horodecki(werner(0.72), P01)
    assert lo.verdict == SATISFIED and hi.verdict == VIOLATED
    assert hi.u_sum == pytest.approx(2 * 0.72 ** 2)
    # the purity form with the two-qubit rest agrees for Werner states
    assert lo.purity_form == SATISFIED and hi.purity_form == VIOLATED


def test_chsh_inapplicable():
    with pytest.raises(Inapplicable):
        chsh_horodecki(maximally_mixed((2, 3)), P01)


def test_chsh_tie_counts_as_satisfied():
    rep = chsh_horodecki(werner(1 / math.sqrt(2)), P01)
    assert rep.verdict == SATISFIED


def test_bell_partial_sum_bell_state():
    T = corr_tensor(bell_state("phi+"), P01)
    xz = np.array([[1.0, 0, 0], [0, 0, 1.0]])
    assert bell_partial_sum(T, [xz, xz]) == pytest.approx(2.0)
    with pytest.raises(InvalidFrame):
        bell_partial_sum(T, [xz, np.array([[1.0, 0, 0], [1.0, 0, 0]])])
    with pytest.raises(InvalidFrame):
        bell_partial_sum(T, [xz])


def test_best_partial_sum_bounded_by_norm(rng):
    for _ in range(20):
        rho = DensityMatrix((2, 2), ginibre_state(4, rng))
        T = corr_tensor(rho, P01)
        best, axes = best_bell_partial_sum(T, rng, restarts=16)
        assert best <= float(np.sum(full_support(T) ** 2)) + 1e-12
        assert len(axes) == 2


def test_random_frame_orthonormal(rng):
    for _ in range(10):
        f = random_frame(rng)
        assert_allclose(f @ f.T, np.eye(2), atol=1e-12)


def test_t_diagonalize(rng):
    for _ in range(20):
        t = rng.standard_normal((3, 3))
        o1, o2, diag = t_diagonalize(t)
        assert np.linalg.det(o1) == pytest.approx(1) and np.linalg.det(o2) == pytest.approx(1)
        assert_allclose(o1.T @ t @ o2, np.diag(diag), atol=1e-12)


def test_rotation_to_su2(rng):
    paulis = generators(2).generators
    for _ in range(10):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        w = rotation_to_su2(q)
        assert_allclose(w @ w.conj().T, np.eye(2), atol=1e-12)
        for j in range(3):
            assert_allclose(w @ paulis[j] @ w.conj().T,
                            np.einsum("i,iab->ab", q[:, j], paulis), atol=1e-12)


@pytest.mark.parametrize("part", ["0|1", "1|0"])
def test_t_diagonal_form(part, rng):
    p = PartitionScheme.parse(part)
    rho = DensityMatrix((2, 2), ginibre_state(4, rng))
    rot, diag = t_diagonal_form(rho, p)
    t = full_support(corr_tensor(rot, p))
    assert_allclose(t, np.diag(diag), atol=1e-11)
    # local rotations leave every purity unchanged
    a, b = reduced_purities(rho, p), reduced_purities(rot, p)
    for s in a.entries:
        assert a[s] == pytest.approx(b[s], abs=1e-12)


def test_gme3_verdict_in_report():
    rep = ksep_verdict(noisy_ghz(3, 1.0), PartitionScheme.finest(3))
    assert rep.verdicts["gme3"] == VIOLATED
    assert rep.auxiliary["gme_bound"] == 3.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([(2, 2), (2, 3), (3, 3), (2, 2, 2)]))
def test_pure_product_never_violates(seed, dims):
    rng = np.random.default_rng(seed)
    factors = [DensityMatrix((d,), pure_state(d, rng)) for d in dims]
    rho = tensor(*factors)
    for p in set_partitions(len(dims)):
        assert ksep_delta_tilde(reduced_purities(rho, p)) >= -1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_separable_mixtures_satisfy(seed):
    rng = np.random.default_rng(seed)
    m = np.zeros((4, 4), complex)
    weights = rng.dirichlet(np.ones(4))
    for w in weights:
        m += w * np.kron(pure_state(2, rng), pure_state(2, rng))
    rep = ksep_verdict(DensityMatrix((2, 2), m), P01)
    assert rep.verdicts["ksep"] == SATISFIED
    assert rep.verdicts["chsh"] == SATISFIED


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_chsh_violation_implies_detection(seed):
    rng = np.random.default_rng(seed)
    m = pure_state(4, rng) if seed % 2 else ginibre_state(4, rng)
    rep = ksep_verdict(DensityMatrix((2, 2), m), P01)
    if rep.verdicts["chsh"] == VIOLATED:
        assert rep.verdicts["norm_form"] == VIOLATED


def test_synthetic_purity_map_spread_term():
    pm = purity_map_from_values((2, 2), {(0,): 0.5, (1,): 0.5, (0, 1): 1.0})
    assert ksep_delta_tilde(pm) == pytest.approx(-2.0)
