import numpy as np
import pytest

from cellwalk.complex import from_manifest
from cellwalk.generators import random_complex

CORPUS_SEED = 20240601


def random_corpus(count=100, seed=CORPUS_SEED, ranks=(0,)):
    """Random complexes with <= 8 k-orbits and coefficients in [-3, 3].

    The default is finite complexes (trivial group); pass ``ranks`` to mix in Z^d.
    """
    rng = np.random.default_rng(seed)
    return [random_complex(rng, k=1, max_orbits=8, max_coeff=3, rank=ranks[i % len(ranks)])
            for i in range(count)]


def worked_example():
    """alpha in the boundary of two (k+1)-cells with coefficients 1 and -2."""
    return from_manifest({
        "group": {"kind": "trivial"},
        "cells": {"1": ["alpha", "alpha1", "alpha2", "alpha3"], "2": ["beta1", "beta2"]},
        "incidence": {"2": [
            {"cell": "beta1", "faces": [{"face": "alpha", "coeff": 1},
                                        {"face": "alpha1", "coeff": 1},
                                        {"face": "alpha2", "coeff": 2}]},
            {"cell": "beta2", "faces": [{"face": "alpha", "coeff": -2},
                                        {"face": "alpha2", "coeff": 4},
                                        {"face": "alpha3", "coeff": -2}]},
        ]},
    })


def random_simplicial_facets(seed=7, n_vertices=6, n_facets=6):
    rng = np.random.default_rng(seed)
    facets = set()
    while len(facets) < n_facets:
        facets.add(tuple(sorted(rng.choice(n_vertices, size=3, replace=False).tolist())))
    return sorted(facets)


@pytest.fixture(scope="session")
def corpus():
    return random_corpus()


ACCEPTANCE_LINES = []


def acceptance(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
