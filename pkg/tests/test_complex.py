import itertools
import json
from collections import deque
from fractions import Fraction

import numpy as np
import pytest

from cellwalk.complex import (
    DegenerateCell,
    ManifestError,
    boundary_matrix,
    check_upper_k_connected,
    check_upper_k_regular,
    degree_quantities,
    dumps_complex,
    from_manifest,
    load_complex,
    save_complex,
    upper_adjacency,
)
from cellwalk.generators import cayley_suspension, grid, grid2d, parse_generator, simplicial
from cellwalk.group_ring import parse_element

from conftest import random_corpus, worked_example


def line_complex(step):
    """Z acting on R with one vertex orbit and one edge from 0 to ``step``."""
    return from_manifest({
        "group": {"kind": "free_abelian", "rank": 1},
        "cells": {"0": ["v"], "1": ["e"]},
        "incidence": {"1": [{"cell": "e", "faces": [{"face": "v", "shift": [0], "coeff": -1},
                                                    {"face": "v", "shift": [step], "coeff": 1}]}]},
    })


def test_grid2d_boundary_and_degrees():
    X = grid2d()
    d2 = boundary_matrix(X, 1)
    assert d2[0, 0] == parse_element("1 - x", X.group)
    assert d2[1, 0] == parse_element("y - 1", X.group)
    dd = degree_quantities(X, 1)
    assert set(dd.d_plus.values()) == {2}
    assert set(dd.d_plus2.values()) == {2}
    assert set(dd.d_minus.values()) == {3}
    assert dd.S_k == 8 and dd.q0 == Fraction(1, 2) and dd.regular


def test_dd_zero_on_generators():
    for X in [grid2d(), grid(3), simplicial([[0, 1, 2, 3]]), cayley_suspension(2, 3)]:
        for k in range(1, X.dim):
            if X.orbits(k - 1) and X.orbits(k) and X.orbits(k + 1):
                assert (boundary_matrix(X, k - 1) @ boundary_matrix(X, k)).total_support() == 0


def test_tetrahedron_boundary_against_dense_oracle():
    X = simplicial([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    # dense boundary matrices written out from the alternating-face rule
    verts = [0, 1, 2, 3]
    edges = list(itertools.combinations(verts, 2))
    tris = list(itertools.combinations(verts, 3))
    d1 = np.zeros((4, 6))
    for j, (a, b) in enumerate(edges):
        d1[a, j], d1[b, j] = -1, 1
    d2 = np.zeros((6, 4))
    for j, t in enumerate(tris):
        for i in range(3):
            d2[edges.index(t[:i] + t[i + 1:]), j] = (-1) ** i
    assert np.all(d1 @ d2 == 0)

    def as_array(m):
        return np.array([[float(e.coeff(())) for e in r] for r in m.entries])

    np.testing.assert_array_equal(as_array(boundary_matrix(X, 0)), d1)
    np.testing.assert_array_equal(as_array(boundary_matrix(X, 1)), d2)


def test_simplicial_single_simplex_faces_have_d_plus_one():
    X = simplicial([[0, 1, 2, 3]])
    dd = degree_quantities(X, 2)
    assert set(dd.d_plus.values()) == {1}
    assert set(dd.d_minus.values()) == {3}


def test_cayley_suspension_degrees():
    X = cayley_suspension(2, 3)
    dd = degree_quantities(X, 3)
    assert dd.d_plus == {"a": 4} and dd.d_plus2 == {"a": 4} and dd.d_minus == {"a": 1}
    assert check_upper_k_regular(X, 3).C1(Fraction(1, 3)) == 1
    with pytest.raises(ValueError):
        cayley_suspension(2, 1)


def test_worked_example_degrees():
    dd = degree_quantities(worked_example(), 1)
    assert dd.d_plus["alpha"] == 3
    assert dd.d_plus2["alpha"] == 5
    assert dd.d_minus["alpha"] == 6


def test_degenerate_cell():
    X = simplicial([[0, 1]])
    with pytest.raises(DegenerateCell):
        degree_quantities(X, 1)
    dd = degree_quantities(X, 1, allow_absorbing=True)
    assert dd.d_plus == {"s0-1": 0}


@pytest.mark.parametrize("doc", [
    {"group": {"kind": "trivial"}, "cells": {"0": ["v"], "1": ["e"]},
     "incidence": {"1": [{"cell": "e", "faces": [{"face": "w", "coeff": 1}]}]}},
    {"group": {"kind": "free_abelian", "rank": 2}, "cells": {"0": ["v"], "1": ["e"]},
     "incidence": {"1": [{"cell": "e", "faces": [{"face": "v", "shift": [1], "coeff": 1}]}]}},
    {"group": {"kind": "trivial"}, "cells": {"0": ["v", "v"]}},
    {"group": {"kind": "trivial"}, "cells": {"zero": ["v"]}},
    {"group": {"kind": "trivial"}, "cells": {"0": ["v"]}, "extra": 1},
    {"group": {"kind": "cyclic", "rank": 3}, "cells": {"0": ["v"]}},
    {"group": {"kind": "trivial"}, "cells": {"0": ["v"], "1": ["e"]},
     "incidence": {"1": [{"cell": "e", "faces": [{"face": "v", "coeff": 0.5}]}]}},
    {"cells": {"0": ["v"]}},
])
def test_manifest_errors(doc):
    with pytest.raises(ManifestError):
        from_manifest(doc)


def test_invalid_json():
    with pytest.raises(ManifestError):
        load_complex("{not json")


def test_duplicates_summed_and_zeros_dropped():
    X = from_manifest({
        "group": {"kind": "trivial"}, "cells": {"0": ["v", "w"], "1": ["e"]},
        "incidence": {"1": [{"cell": "e", "faces": [{"face": "v", "coeff": 2}, {"face": "v", "coeff": -1},
                                                    {"face": "w", "coeff": 1}, {"face": "w", "coeff": -1}]}]},
    })
    assert [(f.orbit, f.coeff) for f in X.faces(1, "e")] == [("v", 1)]


@pytest.mark.parametrize("spec", ["grid2d", "grid:3", "cayley_suspension:2:2",
                                  "cayley_suspension:3:4", "simplicial:0,1,2;0,1,3;1,2,3"])
def test_generated_manifests_are_fixed_points(spec, tmp_path):
    X = parse_generator(spec)
    text = dumps_complex(X)
    path = tmp_path / "c.json"
    save_complex(X, path)
    Y = load_complex(path)
    assert Y == X
    assert dumps_complex(Y) == text
    assert json.loads(text) == json.loads(dumps_complex(load_complex(text)))


def test_random_corpus_round_trip():
    for X in random_corpus(20, seed=3, ranks=(0, 1, 2)):
        assert load_complex(dumps_complex(X)) == X


def test_connectivity_of_lines():
    assert check_upper_k_connected(line_complex(1), 0).connected
    rep = check_upper_k_connected(line_complex(2), 0)
    assert not rep.connected and rep.lattice_index == 2
    assert check_upper_k_connected(grid2d(), 1).connected
    assert not check_upper_k_connected(simplicial([[0, 1, 2], [3, 4, 5]]), 1).connected


def _reachable_by_paths(X, k, radius=8, target=1):
    """Breadth-first search in the lifted adjacency graph, confined to a window."""
    d = X.group.rank
    adj = {}
    for a, b, s in upper_adjacency(X, k):
        adj.setdefault(a, []).append((b, s))
    start = (X.orbits(k)[0], (0,) * d)
    seen = {start}
    queue = deque([start])
    while queue:
        a, g = queue.popleft()
        for b, s in adj.get(a, []):
            h = tuple(x + y for x, y in zip(g, s))
            if max(map(abs, h), default=0) <= radius and (b, h) not in seen:
                seen.add((b, h))
                queue.append((b, h))
    wanted = {(a, g) for a in X.orbits(k)
              for g in itertools.product(range(-target, target + 1), repeat=d)}
    return wanted <= seen


def test_connectivity_matches_path_enumeration():
    for X in random_corpus(60, seed=11, ranks=(1, 2)):
        if X.group.rank == 0:
            continue
        rep = check_upper_k_connected(X, 1)
        assert rep.connected == _reachable_by_paths(X, 1)


def test_shift_invariance_of_degree_data():
    # translating every face of one (k+1)-cell by the same group element changes nothing
    X = grid2d()
    doc = json.loads(dumps_complex(X))
    for f in doc["incidence"]["2"][0]["faces"]:
        f["shift"] = [f["shift"][0] + 3, f["shift"][1] - 2]
    Y = from_manifest(doc)
    a, b = degree_quantities(X, 1), degree_quantities(Y, 1)
    assert (a.d_plus, a.d_plus2, a.d_minus, a.S_k) == (b.d_plus, b.d_plus2, b.d_minus, b.S_k)
    assert check_upper_k_connected(Y, 1).connected


def test_q0_in_unit_interval_and_D_bounds():
    from cellwalk.operators import multiplication_values

    for X in random_corpus(40, seed=5, ranks=(0, 1, 2)):
        dd = degree_quantities(X, 1)
        assert 0 <= dd.q0 < 1
        for q in (Fraction(0), Fraction(1, 3), Fraction(1)):
            m1, m2 = multiplication_values(X, 1, q)
            assert all(v >= Fraction(1, dd.D ** 2) for v in m1)
            assert all(v >= (1 - q) / dd.D ** 2 for v in m2)
