"""Group rings R[G] for G trivial or free abelian, and matrices over them.

Elements of ``Z^d`` are plain integer tuples; composition is coordinate-wise
addition.  A :class:`GroupRingElement` is a finitely supported map from group
elements to coefficients, either exact (``Fraction``) or 64-bit floats.

Matrix convention: entry ``M[i][j]`` holds the group-ring element whose
coefficient at ``g`` is the coefficient of ``g * basis_i`` in ``M(basis_j)``.
Since G is abelian the usual row-by-column product composes these operators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import signal

DEFAULT_SUPPORT_CAP = 10**7

_VARS = "xyz"


class GroupMismatch(ValueError):
    pass


class ScalarModeMismatch(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SupportCapExceeded(RuntimeError):
    """Raised instead of truncating when a product would grow past the cap."""


@dataclass(frozen=True)
class Group:
    kind: str = "trivial"
    rank: int = 0

    def __post_init__(self):
        if self.kind == "trivial":
            if self.rank != 0:
                raise ValueError("trivial group has rank 0")
        elif self.kind == "free_abelian":
            if self.rank < 1:
                raise ValueError("free abelian group needs rank >= 1")
        else:
            raise ValueError(f"unsupported group kind {self.kind!r}")

    @classmethod
    def trivial(cls) -> "Group":
        return cls("trivial", 0)

    @classmethod
    def free_abelian(cls, rank: int) -> "Group":
        return cls("free_abelian", rank)

    @property
    def identity(self) -> tuple[int, ...]:
        return (0,) * self.rank

    def element(self, coords: Iterable[int] | None = None) -> tuple[int, ...]:
        g = tuple(int(c) for c in (coords or ()))
        if len(g) != self.rank:
            raise GroupMismatch(f"expected {self.rank} coordinates, got {len(g)}")
        return g

    def generator(self, i: int) -> tuple[int, ...]:
        return tuple(1 if j == i else 0 for j in range(self.rank))

    def var_name(self, i: int) -> str:
        return _VARS[i] if self.rank <= len(_VARS) else f"x{i + 1}"


def compose(g: tuple[int, ...], h: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a + b for a, b in zip(g, h))


def inverse(g: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-a for a in g)


def _coerce(c, exact: bool):
    if exact:
        if isinstance(c, float):
            raise ScalarModeMismatch("float coefficient given to an exact element")
        return Fraction(c)
    return float(c)


class GroupRingElement:
    """Immutable finitely supported element of R[G]."""

    __slots__ = ("group", "terms", "exact")

    def __init__(self, group: Group, terms: Mapping | None = None, exact: bool = True):
        self.group = group
        self.exact = exact
        clean = {}
        for g, c in (terms or {}).items():
            c = _coerce(c, exact)
            if c != 0:
                clean[tuple(g)] = c
        self.terms = clean

    @classmethod
    def _raw(cls, group, terms, exact):
        obj = cls.__new__(cls)
        obj.group = group
        obj.terms = terms
        obj.exact = exact
        return obj

    @classmethod
    def zero(cls, group: Group, exact: bool = True) -> "GroupRingElement":
        return cls._raw(group, {}, exact)

    @classmethod
    def one(cls, group: Group, exact: bool = True) -> "GroupRingElement":
        return cls.monomial(group, group.identity, 1, exact)

    @classmethod
    def monomial(cls, group: Group, g, coeff=1, exact: bool = True) -> "GroupRingElement":
        return cls(group, {group.element(g): coeff}, exact)

    def _check(self, other: "GroupRingElement"):
        if other.group != self.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")
        if other.exact != self.exact:
            raise ScalarModeMismatch("cannot mix exact and float elements")

    def coeff(self, g) -> Number:
        return self.terms.get(tuple(g), Fraction(0) if self.exact else 0.0)

    @property
    def support(self) -> frozenset:
        return frozenset(self.terms)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, GroupRingElement):
            return self.group == other.group and self.terms == other.terms
        if isinstance(other, Number):
            return self == GroupRingElement(self.group, {self.group.identity: other}, self.exact)
        return NotImplemented

    __hash__ = None

    def __neg__(self):
        return self._raw(self.group, {g: -c for g, c in self.terms.items()}, self.exact)

    def __add__(self, other):
        if isinstance(other, Number):
            other = self._scalar(other)
        elif not isinstance(other, GroupRingElement):
            return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for g, c in other.terms.items():
            v = out.get(g, 0) + c
            if v == 0:
                out.pop(g, None)
            else:
                out[g] = v
        return self._raw(self.group, out, self.exact)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Number):
            other = self._scalar(other)
        elif not isinstance(other, GroupRingElement):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def _scalar(self, c) -> "GroupRingElement":
        return GroupRingElement(self.group, {self.group.identity: c}, self.exact)

    def scale(self, c) -> "GroupRingElement":
        c = _coerce(c, self.exact)
        if c == 0:
            return self.zero(self.group, self.exact)
        return self._raw(self.group, {g: v * c for g, v in self.terms.items()}, self.exact)

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return ring_multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def star(self) -> "GroupRingElement":
        return involution(self)

    def augmentation(self):
        """Image under g -> 1 for every group element."""
        return sum(self.terms.values(), Fraction(0) if self.exact else 0.0)

    def to_float(self) -> "GroupRingElement":
        return self._raw(self.group, {g: float(c) for g, c in self.terms.items()}, False)

    def fourier(self, theta) -> complex | np.ndarray:
        """Sum of c_g exp(i <theta, g>); ``theta`` may be a batch of shape (N, d)."""
        if self.group.kind != "free_abelian":
            raise GroupMismatch("Fourier evaluation needs a free abelian group")
        theta = np.asarray(theta, dtype=float)
        if not self.terms:
            return np.zeros(theta.shape[:-1], dtype=complex) if theta.ndim > 1 else 0j
        gs = np.array(list(self.terms), dtype=float)
        cs = np.array([float(c) for c in self.terms.values()])
        return np.exp(1j * theta @ gs.T) @ cs

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for g in sorted(self.terms):
            c = self.terms[g]
            mono = "*".join(
                self.group.var_name(i) + ("" if e == 1 else f"^{e}")
                for i, e in enumerate(g) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


_TERM = re.compile(r"([+-])?\s*([^+-]+)")


def parse_element(text: str, group: Group, exact: bool = True) -> GroupRingElement:
    """Parse strings like ``"1 - x - y^-1 + x*y^-1"`` or ``"(1/6)*x^2 - 3/4"``.

    Terms are ``[coeff*]monomial`` with monomials ``x^a*y^b``; variable names
    are x, y, z (or x1, x2, ... for rank > 3).
    """
    names = {group.var_name(i): i for i in range(group.rank)}
    s = text.replace(" ", "").replace("^-", "^~")
    out = GroupRingElement.zero(group, exact)
    for sign, body in _TERM.findall(s):
        coeff = Fraction(-1 if sign == "-" else 1)
        g = [0] * group.rank
        for factor in body.split("*"):
            factor = factor.replace("^~", "^-")
            if re.fullmatch(r"\(?\d+(/\d+)?\)?", factor):
                coeff *= Fraction(factor.strip("()"))
                continue
            name, _, exp = factor.partition("^")
            if name not in names:
                raise ValueError(f"unknown variable {name!r} in {text!r}")
            g[names[name]] += int(exp) if exp else 1
        out = out + GroupRingElement(group, {tuple(g): coeff if exact else float(coeff)}, exact)
    return out


def ring_multiply(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    """Convolution product (ab)(g) = sum_h a(h) b(h^-1 g)."""
    a._check(b)
    if not a.terms or not b.terms:
        return GroupRingElement.zero(a.group, a.exact)
    if len(a.terms) < len(b.terms):
        a, b = b, a
    out: dict = {}
    get = out.get
    if a.group.rank == 0:
        e = a.group.identity
        return GroupRingElement._raw(a.group, _nonzero({e: a.terms[e] * b.terms[e]}), a.exact)
    for h, bc in b.terms.items():
        for g, ac in a.terms.items():
            key = tuple(x + y for x, y in zip(g, h))
            out[key] = get(key, 0) + ac * bc
    return GroupRingElement._raw(a.group, _nonzero(out), a.exact)


def _nonzero(d: dict) -> dict:
    return {g: c for g, c in d.items() if c != 0}


def involution(a: GroupRingElement) -> GroupRingElement:
    """a*(g) = conj(a(g^-1))."""
    return GroupRingElement._raw(
        a.group, {inverse(g): c.conjugate() for g, c in a.terms.items()}, a.exact
    )


class GroupRingMatrix:
    """Dense matrix of group-ring elements; immutable by convention."""

    __slots__ = ("group", "exact", "entries", "shape")

    def __init__(self, group: Group, entries: Sequence[Sequence[GroupRingElement]],
                 exact: bool = True, shape: tuple[int, int] | None = None):
        rows = tuple(tuple(r) for r in entries)
        if shape is None:
            shape = (len(rows), len(rows[0]) if rows else 0)
        if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
            raise DimensionMismatch("ragged group-ring matrix")
        for r in rows:
            for e in r:
                if e.group != group:
                    raise GroupMismatch("entry over a different group")
                if e.exact != exact:
                    raise ScalarModeMismatch("mixed scalar modes in matrix")
        self.group = group
        self.exact = exact
        self.entries = rows
        self.shape = shape

    @classmethod
    def zeros(cls, group: Group, rows: int, cols: int, exact: bool = True) -> "GroupRingMatrix":
        z = GroupRingElement.zero(group, exact)
        return cls(group, [[z] * cols for _ in range(rows)], exact, (rows, cols))

    @classmethod
    def identity(cls, group: Group, m: int, exact: bool = True) -> "GroupRingMatrix":
        return cls.diagonal(group, [1] * m, exact)

    @classmethod
    def diagonal(cls, group: Group, values: Sequence, exact: bool = True) -> "GroupRingMatrix":
        m = len(values)
        z = GroupRingElement.zero(group, exact)
        rows = [[z] * m for _ in range(m)]
        for i, v in enumerate(values):
            rows[i][i] = v if isinstance(v, GroupRingElement) else \
                GroupRingElement(group, {group.identity: v}, exact)
        return cls(group, rows, exact, (m, m))

    @classmethod
    def from_strings(cls, group: Group, rows: Sequence[Sequence[str]],
                     exact: bool = True) -> "GroupRingMatrix":
        return cls(group, [[parse_element(s, group, exact) for s in r] for r in rows], exact)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if not isinstance(other, GroupRingMatrix):
            return NotImplemented
        return (self.group == other.group and self.shape == other.shape
                and all(a == b for ra, rb in zip(self.entries, other.entries)
                        for a, b in zip(ra, rb)))

    __hash__ = None

    def _check(self, other: "GroupRingMatrix"):
        if other.group != self.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")
        if other.exact != self.exact:
            raise ScalarModeMismatch("cannot mix exact and float matrices")

    def _map(self, fn) -> "GroupRingMatrix":
        rows = [[fn(e) for e in r] for r in self.entries]
        exact = rows[0][0].exact if rows and rows[0] else self.exact
        return GroupRingMatrix(self.group, rows, exact, self.shape)

    def __add__(self, other):
        self._check(other)
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        return GroupRingMatrix(self.group, [[a + b for a, b in zip(ra, rb)]
                                            for ra, rb in zip(self.entries, other.entries)],
                               self.exact, self.shape)

    def __neg__(self):
        return self._map(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "GroupRingMatrix":
        return self._map(lambda e: e.scale(c))

    def __mul__(self, c):
        if isinstance(c, Number):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matrix_multiply(self, other)

    def star(self) -> "GroupRingMatrix":
        """Adjoint: transpose with entrywise involution."""
        rows, cols = self.shape
        return GroupRingMatrix(self.group,
                               [[involution(self.entries[i][j]) for i in range(rows)]
                                for j in range(cols)], self.exact, (cols, rows))

    def to_float(self) -> "GroupRingMatrix":
        return self._map(lambda e: e.to_float())

    def total_support(self) -> int:
        return sum(len(e) for r in self.entries for e in r)

    def column(self, j: int) -> "GroupRingMatrix":
        return GroupRingMatrix(self.group, [[r[j]] for r in self.entries], self.exact,
                               (self.shape[0], 1))

    def augmentation(self) -> np.ndarray | list:
        return [[e.augmentation() for e in r] for r in self.entries]

    def max_abs_diff(self, other: "GroupRingMatrix"):
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        worst = 0
        for ra, rb in zip(self.entries, other.entries):
            for a, b in zip(ra, rb):
                d = (a - b) if a.exact == b.exact else (a.to_float() - b.to_float())
                for c in d.terms.values():
                    worst = max(worst, abs(c))
        return worst

    def fourier(self, theta) -> np.ndarray:
        return fourier_evaluate(self, theta)

    def __repr__(self):
        body = "; ".join(", ".join(repr(e) for e in r) for r in self.entries)
        return f"GroupRingMatrix[{body}]"


def matrix_multiply(a: GroupRingMatrix, b: GroupRingMatrix,
                    support_cap: int = DEFAULT_SUPPORT_CAP) -> GroupRingMatrix:
    a._check(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"{a.shape} @ {b.shape}")
    rows, inner = a.shape
    cols = b.shape[1]
    zero = GroupRingElement.zero(a.group, a.exact)
    out = []
    total = 0
    for i in range(rows):
        arow = a.entries[i]
        row = []
        for j in range(cols):
            acc = zero
            for l in range(inner):
                x = arow[l]
                if not x:
                    continue
                y = b.entries[l][j]
                if y:
                    acc = acc + ring_multiply(x, y)
            total += len(acc)
            if total > support_cap:
                raise SupportCapExceeded(
                    f"product support exceeds cap of {support_cap} terms")
            row.append(acc)
        out.append(row)
    return GroupRingMatrix(a.group, out, a.exact, (rows, cols))


def matrix_power(m: GroupRingMatrix, n: int,
                 support_cap: int = DEFAULT_SUPPORT_CAP) -> GroupRingMatrix:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("power of a non-square matrix")
    if n < 0:
        raise ValueError("negative matrix power")
    out = GroupRingMatrix.identity(m.group, m.shape[0], m.exact)
    for _ in range(n):
        out = matrix_multiply(m, out, support_cap)
    return out


def identity_trace(m: GroupRingMatrix):
    """Sum over the diagonal of the identity coefficient (von Neumann trace)."""
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("trace of a non-square matrix")
    e = m.group.identity
    total = Fraction(0) if m.exact else 0.0
    for i in range(m.shape[0]):
        total += m.entries[i][i].coeff(e)
    return total


def fourier_evaluate(m: GroupRingMatrix, theta) -> np.ndarray:
    """Entrywise Fourier symbol; ``theta`` of shape (d,) or (N, d).

    Returns a complex array of shape (rows, cols) or (N, rows, cols).
    """
    if m.group.kind != "free_abelian":
        raise GroupMismatch("Fourier evaluation needs a free abelian group")
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    theta = np.atleast_2d(theta)
    if theta.shape[1] != m.group.rank:
        raise DimensionMismatch(f"theta has {theta.shape[1]} components, rank {m.group.rank}")
    rows, cols = m.shape
    shifts, coeffs, flat = _term_table(m)
    out = np.zeros((theta.shape[0], rows * cols), dtype=complex)
    if len(coeffs):
        phase = np.exp(1j * (theta @ shifts.T)) * coeffs
        for t in range(len(coeffs)):
            out[:, flat[t]] += phase[:, t]
    out = out.reshape(theta.shape[0], rows, cols)
    return out[0] if single else out


def _term_table(m: GroupRingMatrix):
    shifts, coeffs, flat = [], [], []
    cols = m.shape[1]
    for i, r in enumerate(m.entries):
        for j, e in enumerate(r):
            for g, c in e.terms.items():
                shifts.append(g)
                coeffs.append(float(c))
                flat.append(i * cols + j)
    return (np.array(shifts, dtype=float).reshape(-1, m.group.rank),
            np.array(coeffs), np.array(flat, dtype=int))


def dense_laurent(m: GroupRingMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Float array of shape (rows, cols, *box) and the offset of index 0.

    Coefficient of g in entry (i, j) sits at ``arr[i, j][g - offset]``.
    """
    d = m.group.rank
    pts = [g for r in m.entries for e in r for g in e.terms] or [m.group.identity]
    lo = np.min(np.array(pts, dtype=int).reshape(-1, d), axis=0)
    hi = np.max(np.array(pts, dtype=int).reshape(-1, d), axis=0)
    arr = np.zeros(m.shape + tuple(int(x) for x in hi - lo + 1))
    for i, r in enumerate(m.entries):
        for j, e in enumerate(r):
            for g, c in e.terms.items():
                arr[(i, j) + tuple(int(x) for x in np.subtract(g, lo))] += float(c)
    return arr, lo


def power_traces_float(m: GroupRingMatrix, n_max: int, scale: float = 1.0,
                       support_cap: int = DEFAULT_SUPPORT_CAP) -> np.ndarray:
    """identity_trace((scale*M)^n) for n = 0..n_max using float convolutions."""
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("trace of a non-square matrix")
    size = m.shape[0]
    out = np.empty(n_max + 1)
    out[0] = size
    if m.group.rank == 0:
        a = np.array([[float(e.coeff(())) for e in r] for r in m.entries]) * scale
        acc = np.eye(size)
        for n in range(1, n_max + 1):
            acc = a @ acc
            out[n] = np.trace(acc)
        return out
    kern, koff = dense_laurent(m)
    kern = kern * scale
    d = m.group.rank
    acc = np.zeros((size, size) + (1,) * d)
    for i in range(size):
        acc[(i, i) + (0,) * d] = 1.0
    off = np.zeros(d, dtype=int)
    for n in range(1, n_max + 1):
        box = tuple(a + b - 1 for a, b in zip(kern.shape[2:], acc.shape[2:]))
        if size * size * int(np.prod(box)) > support_cap:
            raise SupportCapExceeded(f"power {n} exceeds support cap of {support_cap} terms")
        nxt = np.zeros((size, size) + box)
        for i in range(size):
            for j in range(size):
                for l in range(size):
                    if kern[i, l].any() and acc[l, j].any():
                        nxt[i, j] += signal.convolve(kern[i, l], acc[l, j], mode="full")
        acc = nxt
        off = off + koff
        idx = tuple(int(x) for x in -off)
        out[n] = sum(acc[(i, i) + idx] for i in range(size)) \
            if all(0 <= x < s for x, s in zip(idx, box)) else 0.0
    return out
