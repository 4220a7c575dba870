"""Builtin complexes: the Z^2 plane, cubical Z^d, simplicial, Cayley suspensions."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .complex import GCWComplex, from_manifest


def grid2d() -> GCWComplex:
    """R^2 as a Z^2-complex: one vertex, edges a_up/a_right, one clockwise square."""
    return from_manifest({
        "group": {"kind": "free_abelian", "rank": 2},
        "cells": {"0": ["v"], "1": ["a_up", "a_right"], "2": ["f"]},
        "incidence": {
            "1": [
                {"cell": "a_up", "faces": [{"face": "v", "shift": [0, 0], "coeff": -1},
                                           {"face": "v", "shift": [0, 1], "coeff": 1}]},
                {"cell": "a_right", "faces": [{"face": "v", "shift": [0, 0], "coeff": -1},
                                              {"face": "v", "shift": [1, 0], "coeff": 1}]},
            ],
            "2": [
                {"cell": "f", "faces": [
                    {"face": "a_up", "shift": [0, 0], "coeff": 1},
                    {"face": "a_up", "shift": [1, 0], "coeff": -1},
                    {"face": "a_right", "shift": [0, 1], "coeff": 1},
                    {"face": "a_right", "shift": [0, 0], "coeff": -1},
                ]},
            ],
        },
    })


def _cube_name(subset) -> str:
    return "v" if not subset else "e" + "_".join(str(i + 1) for i in subset)


def grid(d: int) -> GCWComplex:
    """Cubical structure on R^d: one orbit per coordinate subset.

    The cube spanned by directions s_0 < s_1 < ... has boundary
    sum_i (-1)^i (x_{s_i} - 1) * face_i.
    """
    if d < 1:
        raise ValueError("grid dimension must be >= 1")
    cells = {str(j): [_cube_name(s) for s in combinations(range(d), j)] for j in range(d + 1)}
    incidence = {}
    for j in range(1, d + 1):
        recs = []
        for s in combinations(range(d), j):
            faces = []
            for i, direction in enumerate(s):
                rest = _cube_name(tuple(t for t in s if t != direction))
                sign = 1 if i % 2 == 0 else -1
                shifted = [1 if t == direction else 0 for t in range(d)]
                faces.append({"face": rest, "shift": shifted, "coeff": sign})
                faces.append({"face": rest, "shift": [0] * d, "coeff": -sign})
            recs.append({"cell": _cube_name(s), "faces": faces})
        incidence[str(j)] = recs
    return from_manifest({"group": {"kind": "free_abelian", "rank": d},
                          "cells": cells, "incidence": incidence})


def _simplex_name(vs) -> str:
    return "s" + "-".join(str(v) for v in vs)


def simplicial(facets) -> GCWComplex:
    """Simplicial complex from facets; simplices oriented by sorted vertex order."""
    simplices: dict[int, set] = {}
    for facet in facets:
        vs = tuple(sorted(set(facet)))
        if not vs:
            raise ValueError("empty facet")
        for j in range(1, len(vs) + 1):
            for face in combinations(vs, j):
                simplices.setdefault(j - 1, set()).add(face)
    cells = {str(k): [_simplex_name(s) for s in sorted(v)] for k, v in sorted(simplices.items())}
    incidence = {}
    for k, sims in simplices.items():
        if k == 0:
            continue
        incidence[str(k)] = [
            {"cell": _simplex_name(s),
             "faces": [{"face": _simplex_name(s[:i] + s[i + 1:]), "coeff": (-1) ** i}
                       for i in range(len(s))]}
            for s in sorted(sims)
        ]
    return from_manifest({"group": {"kind": "trivial"}, "cells": cells, "incidence": incidence})


def cayley_suspension(d: int, k: int) -> GCWComplex:
    """Cayley graph of Z^d with a k-cell glued at every vertex and a (k+1)-cell per edge."""
    if k < 2:
        raise ValueError("cayley_suspension needs k >= 2")
    if d < 1:
        raise ValueError("rank must be >= 1")
    zero = [0] * d
    gens = [[1 if t == i else 0 for t in range(d)] for i in range(d)]
    edges = [f"e{i + 1}" for i in range(d)]
    cells = {"0": ["v"], "1": edges, str(k): ["a"], str(k + 1): [f"b{i + 1}" for i in range(d)]}
    incidence = {
        "1": [{"cell": e, "faces": [{"face": "v", "shift": zero, "coeff": -1},
                                    {"face": "v", "shift": g, "coeff": 1}]}
              for e, g in zip(edges, gens)],
        str(k + 1): [{"cell": f"b{i + 1}",
                      "faces": [{"face": "a", "shift": zero, "coeff": 1},
                                {"face": "a", "shift": g, "coeff": -1}]}
                     for i, g in enumerate(gens)],
    }
    if k == 2:
        # the k-cell's boundary collapses to a vertex
        incidence["2"] = [{"cell": "a", "faces": []}]
    return from_manifest({"group": {"kind": "free_abelian", "rank": d},
                          "cells": cells, "incidence": incidence})


def random_complex(rng: np.random.Generator, k: int = 1, max_orbits: int = 8,
                   max_coeff: int = 3, rank: int = 0, max_shift: int = 1) -> GCWComplex:
    """Random two-degree complex where every k-orbit has d_+ d_- > 0.

    Only degrees k and k+1 carry cells; no boundary relation is imposed.
    """
    m = int(rng.integers(2, max_orbits + 1))
    r = int(rng.integers(1, max_orbits + 1))
    alphas = [f"a{i}" for i in range(m)]
    betas = [f"b{j}" for j in range(r)]

    def coeff():
        c = 0
        while c == 0:
            c = int(rng.integers(-max_coeff, max_coeff + 1))
        return c

    def shift():
        return [int(x) for x in rng.integers(-max_shift, max_shift + 1, size=rank)] if rank else None

    records = {b: {} for b in betas}
    for b in betas:
        nf = int(rng.integers(2, (min(4, m) if rank == 0 else 4) + 1))
        while len(records[b]) < nf:
            a = alphas[int(rng.integers(m))]
            s = shift()
            records[b].setdefault((a, tuple(s or ())), (a, s, coeff()))
    covered = {a for b in betas for (a, _) in records[b]}
    for a in alphas:
        if a not in covered:
            b = betas[int(rng.integers(r))]
            s = shift()
            records[b][(a, tuple(s or ()))] = (a, s, coeff())
    incidence = []
    for b in betas:
        faces = []
        for a, s, c in records[b].values():
            f = {"face": a, "coeff": c}
            if rank:
                f["shift"] = s
            faces.append(f)
        incidence.append({"cell": b, "faces": faces})
    group = {"kind": "free_abelian", "rank": rank} if rank else {"kind": "trivial"}
    return from_manifest({"group": group,
                          "cells": {str(k): alphas, str(k + 1): betas},
                          "incidence": {str(k + 1): incidence}})


def parse_generator(spec: str) -> GCWComplex:
    """``grid2d``, ``grid:D``, ``cayley_suspension:D:K`` or ``simplicial:0,1,2;0,1,3``."""
    name, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    if name == "grid2d" and not args:
        return grid2d()
    if name == "grid" and len(args) == 1:
        return grid(int(args[0]))
    if name == "cayley_suspension" and len(args) == 2:
        return cayley_suspension(int(args[0]), int(args[1]))
    if name == "simplicial" and rest:
        facets = [[int(v) for v in f.split(",") if v.strip()] for f in rest.split(";") if f.strip()]
        return simplicial(facets)
    raise ValueError(f"unknown generator spec {spec!r}")
