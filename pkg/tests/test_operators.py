from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellwalk.complex import check_upper_k_regular, degree_quantities
from cellwalk.generators import cayley_suspension, grid2d, random_complex, simplicial
from cellwalk.group_ring import GroupRingMatrix, identity_trace, matrix_power
from cellwalk.operators import (
    build_B,
    build_P,
    build_T_I,
    build_upper_laplacian,
    eigenstate_check_grid,
    laplacian_from_boundary,
    verify_lemma_identities,
    verify_simplicial_identity,
    verify_theorem_identity,
)
from cellwalk.spectral import quadrature_trace_series
from cellwalk.walk import WalkState, build_transitions

from conftest import worked_example

GRID_B = [["(1/6)*x + (1/6)*x^-1", "1/6 - (1/6)*x - (1/6)*y^-1 + (1/6)*x*y^-1"],
          ["1/6 - (1/6)*x^-1 - (1/6)*y + (1/6)*x^-1*y", "(1/6)*y + (1/6)*y^-1"]]


def test_grid_B_and_laplacian():
    X = grid2d()
    B = GroupRingMatrix.from_strings(X.group, GRID_B)
    assert build_B(X, 1).matrix == B
    L = build_upper_laplacian(X, 1).matrix
    assert L == GroupRingMatrix.identity(X.group, 2).scale(2) - B.scale(6)


def test_grid_eigenstate_checks():
    for q in (0, Fraction(1, 4), Fraction(1, 2), Fraction(9, 10), 1):
        rep = eigenstate_check_grid(q)
        assert rep.holds, rep.checks


def test_B_q_columns_match_transition_table():
    # B_q column alpha = sum over moves of sign * prob * shift, plus q on the diagonal
    X = worked_example()
    q = Fraction(1, 5)
    Bq = build_B(X, 1, q).matrix
    table = build_transitions(X, 1, q)
    idx = X.index(1)
    for a in X.orbits(1):
        expect = {}
        for s, p in table.outgoing(WalkState(a, (), 1)):
            if s.orbit is not None:
                expect[s.orbit] = expect.get(s.orbit, 0) + s.sign * p
        for b in X.orbits(1):
            assert Bq[idx[b], idx[a]].coeff(()) == expect.get(b, 0)


def test_tetrahedron_B_squared_against_dense():
    X = simplicial([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    B = build_B(X, 2 - 1).matrix
    dense = np.array([[float(e.coeff(())) for e in r] for r in B.entries])
    got = np.array([[float(e.coeff(())) for e in r] for r in matrix_power(B, 2).entries])
    np.testing.assert_allclose(got, dense @ dense, atol=1e-15)
    # vertex walk on the tetrahedron: B at degree 0 is the simple random walk matrix
    B0 = build_B(X, 0).matrix
    dense0 = np.array([[float(e.coeff(())) for e in r] for r in B0.entries])
    np.testing.assert_allclose(dense0, (np.ones((4, 4)) - np.eye(4)) / 3)


def test_laplacian_matches_boundary_product():
    for X, k in [(grid2d(), 0), (grid2d(), 1), (cayley_suspension(2, 3), 3), (worked_example(), 1)]:
        assert build_upper_laplacian(X, k).matrix == laplacian_from_boundary(X, k)


def test_grid_trace_of_B_squared_against_quadrature():
    Bq = build_B(grid2d(), 1)
    exact = float(identity_trace(matrix_power(Bq.matrix, 2)))
    quad = quadrature_trace_series(Bq, 2, 64)
    assert quad[2] == pytest.approx(exact, abs=1e-13)


def test_P_rows_and_T_I_shapes():
    X = worked_example()
    table = build_transitions(X, 1, Fraction(1, 3))
    P = build_P(table).matrix
    m = len(X.orbits(1))
    assert P.shape == (2 * m + 1, 2 * m + 1)
    # columns of P are probability vectors (augmentation sums to one)
    aug = np.array(P.augmentation(), dtype=object)
    assert all(sum(aug[:, j]) == 1 for j in range(2 * m + 1))
    ti = build_T_I(X, 1)
    assert ti.T.matrix.shape == (m, 2 * m + 1) and ti.I.matrix.shape == (2 * m + 1, m)


@given(st.integers(0, 10_000), st.sampled_from([0, 1, 2]),
       st.sampled_from([Fraction(0), Fraction(1, 3), Fraction(3, 4), Fraction(1)]))
@settings(max_examples=40, deadline=None)
def test_theorem_identity_property(seed, rank, q):
    X = random_complex(np.random.default_rng(seed), rank=rank)
    assert verify_theorem_identity(X, 1, q).holds


@given(st.integers(0, 10_000), st.sampled_from([0, 1, 2]))
@settings(max_examples=15, deadline=None)
def test_lemma_identities_property(seed, rank):
    X = random_complex(np.random.default_rng(seed), rank=rank)
    assert verify_lemma_identities(X, 1, Fraction(2, 5), 4).holds


def test_identity_failure_is_reported():
    # corrupting B_q must be caught with a positive defect
    X = grid2d()
    rep = verify_theorem_identity(X, 1, Fraction(1, 2))
    assert rep.holds and rep.max_defect == 0
    B = build_B(X, 1, Fraction(1, 2)).matrix
    bad = B + GroupRingMatrix.identity(X.group, 2).scale(Fraction(1, 100))
    assert bad.max_abs_diff(B) == Fraction(1, 100)


@pytest.mark.parametrize("facets", [
    [[0, 1, 2, 3]],
    [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
    [[0, 1, 2, 3, 4]],
])
def test_simplicial_reduction(facets):
    X = simplicial(facets)
    for q in (0, Fraction(1, 3), Fraction(1, 2), 1):
        rep = verify_simplicial_identity(X, q)
        assert rep.holds, rep.checks


def test_regular_constants_on_suspension():
    X = cayley_suspension(3, 2)
    reg = check_upper_k_regular(X, 2)
    assert reg.regular and reg.d_plus_d_minus == 6 and reg.d_plus2 == 6
    assert all(reg.C1(q) == 1 for q in (0, Fraction(1, 2), 1))
    assert degree_quantities(X, 2).q0 == Fraction(1, 2)
