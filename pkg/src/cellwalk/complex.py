"""Free G-CW complexes of finite type described by quotient data."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .group_ring import Group, GroupRingElement, GroupRingMatrix, compose, inverse


class ManifestError(ValueError):
    """The manifest does not describe a valid complex."""


class DegenerateCell(ValueError):
    """A k-cell has d_+ * d_- = 0, so the walk from it is undefined."""


@dataclass(frozen=True)
class Face:
    orbit: str
    shift: tuple[int, ...]
    coeff: int


@dataclass(frozen=True)
class Coface:
    """The (k+1)-cell ``shift * cell`` meeting a k-orbit representative.

    ``index`` points into the faces of ``cell``, at the face that is the
    representative after translation.
    """

    cell: str
    shift: tuple[int, ...]
    coeff: int
    index: int


@dataclass(frozen=True, eq=False)
class GCWComplex:
    group: Group
    cells: dict[int, tuple[str, ...]]
    incidence: dict[int, dict[str, tuple[Face, ...]]] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return max((k for k, v in self.cells.items() if v), default=-1)

    def orbits(self, k: int) -> tuple[str, ...]:
        return self.cells.get(k, ())

    def index(self, k: int) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.orbits(k))}

    def faces(self, k1: int, cell: str) -> tuple[Face, ...]:
        return self.incidence.get(k1, {}).get(cell, ())

    def cofaces(self, k: int) -> dict[str, list[Coface]]:
        """All (k+1)-cells of X meeting each k-orbit representative."""
        out: dict[str, list[Coface]] = {a: [] for a in self.orbits(k)}
        for beta in self.orbits(k + 1):
            for i, f in enumerate(self.faces(k + 1, beta)):
                out[f.orbit].append(Coface(beta, inverse(f.shift), f.coeff, i))
        return out

    def __eq__(self, other):
        if not isinstance(other, GCWComplex):
            return NotImplemented
        return to_manifest(self) == to_manifest(other)

    __hash__ = None


def _shift(group: Group, raw, where: str) -> tuple[int, ...]:
    if group.kind == "trivial":
        if raw not in (None, []):
            raise ManifestError(f"{where}: shifts must be absent or empty for the trivial group")
        return ()
    if raw is None:
        raise ManifestError(f"{where}: missing shift")
    if not isinstance(raw, list) or len(raw) != group.rank or \
            not all(isinstance(c, int) and not isinstance(c, bool) for c in raw):
        raise ManifestError(f"{where}: shift must be a list of {group.rank} integers")
    return tuple(raw)


def from_manifest(doc: dict) -> GCWComplex:
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    for key in ("group", "cells"):
        if key not in doc:
            raise ManifestError(f"missing top-level key {key!r}")
    extra = set(doc) - {"group", "cells", "incidence"}
    if extra:
        raise ManifestError(f"unknown top-level keys {sorted(extra)}")
    g = doc["group"]
    try:
        if not isinstance(g, dict) or set(g) - {"kind", "rank"}:
            raise ValueError("bad group object")
        if g.get("kind") == "trivial":
            if g.get("rank", 0) != 0:
                raise ValueError("trivial group has rank 0")
            group = Group.trivial()
        else:
            rank = g.get("rank")
            if not isinstance(rank, int) or isinstance(rank, bool):
                raise ValueError("rank must be an integer")
            group = Group(g.get("kind"), rank)
    except ValueError as exc:
        raise ManifestError(f"group: {exc}") from None

    cells: dict[int, tuple[str, ...]] = {}
    if not isinstance(doc["cells"], dict):
        raise ManifestError("cells must be an object")
    for key, names in doc["cells"].items():
        k = _degree(key)
        if not isinstance(names, list) or not all(isinstance(n, str) and n for n in names):
            raise ManifestError(f"cells[{key}] must be a list of non-empty strings")
        if len(set(names)) != len(names):
            raise ManifestError(f"duplicate orbit names in degree {k}")
        cells[k] = tuple(names)

    incidence: dict[int, dict[str, tuple[Face, ...]]] = {}
    raw_inc = doc.get("incidence", {})
    if not isinstance(raw_inc, dict):
        raise ManifestError("incidence must be an object")
    for key, records in raw_inc.items():
        k1 = _degree(key)
        if k1 < 1:
            raise ManifestError("incidence degrees start at 1")
        if not isinstance(records, list):
            raise ManifestError(f"incidence[{key}] must be a list")
        tops, bottoms = set(cells.get(k1, ())), set(cells.get(k1 - 1, ()))
        acc: dict[str, dict[tuple[str, tuple[int, ...]], int]] = {}
        for rec in records:
            if not isinstance(rec, dict) or "cell" not in rec or set(rec) - {"cell", "faces"}:
                raise ManifestError(f"incidence[{key}]: bad record {rec!r}")
            beta = rec["cell"]
            if beta not in tops:
                raise ManifestError(f"incidence[{key}]: unknown cell {beta!r}")
            faces = acc.setdefault(beta, {})
            raw_faces = rec.get("faces", [])
            if not isinstance(raw_faces, list):
                raise ManifestError(f"incidence[{key}]: faces of {beta!r} must be a list")
            for f in raw_faces:
                where = f"incidence[{key}] cell {beta!r}"
                if not isinstance(f, dict) or "face" not in f or "coeff" not in f \
                        or set(f) - {"face", "shift", "coeff"}:
                    raise ManifestError(f"{where}: bad face entry {f!r}")
                if f["face"] not in bottoms:
                    raise ManifestError(f"{where}: unknown face {f['face']!r}")
                c = f["coeff"]
                if not isinstance(c, int) or isinstance(c, bool):
                    raise ManifestError(f"{where}: coefficient must be an integer")
                key2 = (f["face"], _shift(group, f.get("shift"), where))
                faces[key2] = faces.get(key2, 0) + c
        incidence[k1] = {
            beta: tuple(Face(a, s, c) for (a, s), c in faces.items() if c != 0)
            for beta, faces in acc.items()
        }
    return GCWComplex(group, cells, incidence)


def _degree(key) -> int:
    try:
        k = int(key)
    except (TypeError, ValueError):
        raise ManifestError(f"degree key {key!r} is not an integer") from None
    if k < 0 or str(k) != str(key):
        raise ManifestError(f"degree key {key!r} is not a non-negative integer")
    return k


def to_manifest(X: GCWComplex) -> dict:
    group = {"kind": "trivial"} if X.group.kind == "trivial" else \
        {"kind": "free_abelian", "rank": X.group.rank}
    doc = {
        "group": group,
        "cells": {str(k): list(v) for k, v in sorted(X.cells.items())},
        "incidence": {},
    }
    for k1, recs in sorted(X.incidence.items()):
        rows = []
        for beta in X.orbits(k1):
            if beta not in recs:
                continue
            faces = []
            for f in recs[beta]:
                entry = {"face": f.orbit}
                if X.group.rank:
                    entry["shift"] = list(f.shift)
                entry["coeff"] = f.coeff
                faces.append(entry)
            rows.append({"cell": beta, "faces": faces})
        doc["incidence"][str(k1)] = rows
    return doc


def load_complex(source) -> GCWComplex:
    """Load from a path, a JSON string, or an already-parsed dict."""
    if isinstance(source, dict):
        return from_manifest(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc}") from None
    return from_manifest(doc)


def dumps_complex(X: GCWComplex) -> str:
    return json.dumps(to_manifest(X), indent=2) + "\n"


def save_complex(X: GCWComplex, path) -> None:
    Path(path).write_text(dumps_complex(X), encoding="utf-8")


def boundary_matrix(X: GCWComplex, k: int, exact: bool = True) -> GroupRingMatrix:
    """d_{k+1} as a (k-orbits x (k+1)-orbits) group-ring matrix."""
    if k < 0 or k + 1 > X.dim:
        raise ValueError(f"no differential d_{k + 1} on a complex of dimension {X.dim}")
    rows, cols = X.orbits(k), X.orbits(k + 1)
    idx = X.index(k)
    entries = [[{} for _ in cols] for _ in rows]
    for j, beta in enumerate(cols):
        for f in X.faces(k + 1, beta):
            entries[idx[f.orbit]][j][f.shift] = f.coeff
    return GroupRingMatrix(
        X.group, [[GroupRingElement(X.group, e, exact) for e in r] for r in entries],
        exact, (len(rows), len(cols)))


@dataclass
class DegreeData:
    k: int
    d_plus2: dict[str, int]
    d_plus: dict[str, int]
    d_minus: dict[str, int]
    # keyed by (alpha, beta, shift of beta)
    d_minus_beta: dict[tuple[str, str, tuple[int, ...]], int]
    D: int
    S_k: int
    q0: Fraction
    regular: bool

    def walk_weight(self, alpha: str) -> int:
        return self.d_plus[alpha] * self.d_minus[alpha]


def degree_quantities(X: GCWComplex, k: int, allow_absorbing: bool = False) -> DegreeData:
    if k < 0 or k > X.dim:
        raise ValueError(f"degree {k} out of range for dimension {X.dim}")
    cof = X.cofaces(k)
    d2, dp, dm, dmb, strength = {}, {}, {}, {}, {}
    for a, lst in cof.items():
        d2[a] = sum(c.coeff ** 2 for c in lst)
        dp[a] = sum(abs(c.coeff) for c in lst)
        best = 0
        total = d2[a]
        for c in lst:
            faces = X.faces(k + 1, c.cell)
            other = sum(abs(f.coeff) for i, f in enumerate(faces) if i != c.index)
            dmb[(a, c.cell, c.shift)] = other
            best = max(best, other)
            total += abs(c.coeff) * other
        dm[a] = best
        strength[a] = total
        if dp[a] * dm[a] == 0 and not allow_absorbing:
            raise DegenerateCell(f"k-cell orbit {a!r} has d_+ * d_- = 0")
    D = max([*d2.values(), *dp.values(), *dm.values()], default=0)
    S = max(strength.values(), default=0)
    regular = len({dp[a] * dm[a] for a in cof}) <= 1 and len(set(d2.values())) <= 1
    q0 = _q0(S, d2, dp, dm, regular)
    return DegreeData(k, d2, dp, dm, dmb, D, S, q0, regular)


def _q0(S, d2, dp, dm, regular) -> Fraction:
    # smallest q with C_{2,q} <= 1/S
    if S == 0 or not d2:
        return Fraction(0)
    if regular:
        a = next(iter(d2))
        num = S - d2[a]
        den = num + dp[a] * dm[a]
        return Fraction(max(num, 0), den) if den else Fraction(0)
    return 1 - Fraction(1, S)


def upper_adjacency(X: GCWComplex, k: int):
    """Voltage edges (alpha, alpha', shift): alpha meets shift*alpha' through a (k+1)-cell."""
    edges = []
    for beta in X.orbits(k + 1):
        faces = X.faces(k + 1, beta)
        for i, f in enumerate(faces):
            for j, h in enumerate(faces):
                if i != j:
                    edges.append((f.orbit, h.orbit, tuple(b - a for a, b in zip(f.shift, h.shift))))
    return edges


@dataclass
class ConnectivityReport:
    connected: bool
    reason: str
    components: list[list[str]] | None = None
    lattice_basis: list[tuple[int, ...]] | None = None
    lattice_index: int | None = None


def check_upper_k_connected(X: GCWComplex, k: int) -> ConnectivityReport:
    orbits = X.orbits(k)
    if X.group.kind == "trivial" and len(orbits) < 2:
        return ConnectivityReport(False, "fewer than two k-cells")
    if not orbits:
        return ConnectivityReport(False, "fewer than two k-cells")
    edges = upper_adjacency(X, k)
    adj: dict[str, list[tuple[str, tuple[int, ...]]]] = {a: [] for a in orbits}
    for a, b, s in edges:
        adj[a].append((b, s))
    components, potential = [], {}
    for root in orbits:
        if root in potential:
            continue
        potential[root] = X.group.identity
        comp, queue = [root], deque([root])
        while queue:
            u = queue.popleft()
            for v, s in adj[u]:
                if v not in potential:
                    potential[v] = compose(potential[u], s)
                    comp.append(v)
                    queue.append(v)
        components.append(comp)
    if len(components) > 1:
        return ConnectivityReport(False, "quotient adjacency graph is disconnected", components)
    if X.group.rank == 0:
        return ConnectivityReport(True, "connected", components)
    cycles = [tuple(p + t - r for p, t, r in zip(potential[a], s, potential[b]))
              for a, b, s in edges]
    basis = hermite_basis(cycles, X.group.rank)
    index = _lattice_index(basis, X.group.rank)
    if index != 1:
        return ConnectivityReport(False, "cycle voltages span a proper sublattice",
                                  components, basis, index)
    return ConnectivityReport(True, "connected", components, basis, 1)


def hermite_basis(vectors, d: int) -> list[tuple[int, ...]]:
    """Row-echelon integer basis of the lattice spanned by ``vectors``."""
    rows = [list(v) for v in vectors if any(v)]
    basis = []
    for col in range(d):
        while True:
            live = [r for r in rows if r[col] != 0]
            if not live:
                break
            pivot = min(live, key=lambda r: abs(r[col]))
            done = True
            for r in live:
                if r is pivot:
                    continue
                q = r[col] // pivot[col]
                for i in range(d):
                    r[i] -= q * pivot[i]
                if r[col] != 0:
                    done = False
            if done:
                rows = [r for r in rows if r is not pivot and any(r)]
                if pivot[col] < 0:
                    pivot = [-x for x in pivot]
                basis.append(tuple(pivot))
                break
            rows = [r for r in rows if any(r)]
    return basis


def _lattice_index(basis, d: int) -> int:
    # 0 encodes infinite index (rank deficient)
    if len(basis) < d:
        return 0
    idx = 1
    for i, b in enumerate(basis):
        idx *= abs(b[i])
    return idx


@dataclass
class RegularityReport:
    regular: bool
    d_plus_d_minus: int | None
    d_plus2: int | None
    C1: Callable[[Fraction], Fraction] | None
    C2: Callable[[Fraction], Fraction] | None


def check_upper_k_regular(X: GCWComplex, k: int, degrees: DegreeData | None = None) -> RegularityReport:
    dd = degrees or degree_quantities(X, k)
    if not dd.regular or not dd.d_plus:
        return RegularityReport(False, None, None, None, None)
    a = next(iter(dd.d_plus))
    pm, p2 = dd.walk_weight(a), dd.d_plus2[a]

    def c1(q):
        q = Fraction(q)
        return Fraction(pm) / (q * pm + (1 - q) * p2)

    def c2(q):
        q = Fraction(q)
        return (1 - q) / (q * pm + (1 - q) * p2)

    return RegularityReport(True, pm, p2, c1, c2)
