"""Group-ring matrices for P_q, T, I, B_q, the upper Laplacian and M_{1,q}, M_{2,q}."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .complex import GCWComplex, boundary_matrix, check_upper_k_regular, degree_quantities
from .group_ring import (
    GroupRingElement,
    GroupRingMatrix,
    matrix_multiply,
    parse_element,
)
from .walk import TransitionTable


@dataclass(frozen=True)
class OperatorRep:
    matrix: GroupRingMatrix
    kind: str
    domain: tuple[str, ...]
    codomain: tuple[str, ...]
    k: int
    q: Fraction | None = None

    def __matmul__(self, other: "OperatorRep") -> GroupRingMatrix:
        return matrix_multiply(self.matrix, other.matrix)


def signed_labels(orbits) -> tuple[str, ...]:
    return tuple(f"+{a}" for a in orbits) + tuple(f"-{a}" for a in orbits) + ("Theta",)


def build_P(table: TransitionTable) -> OperatorRep:
    """Propagation operator over [+orbits, -orbits, Theta]; column = source."""
    X = table.complex
    group = X.group
    orbits = table.orbits
    m = len(orbits)
    idx = {a: i for i, a in enumerate(orbits)}
    size = 2 * m + 1
    cells = [[{} for _ in range(size)] for _ in range(size)]
    e = group.identity
    for a in orbits:
        for sign in (1, -1):
            col = idx[a] + (0 if sign > 0 else m)
            if table.q:
                cells[col][col][e] = table.q
            for mv in table.moves[a]:
                row = idx[mv.orbit] + (0 if sign * mv.sign > 0 else m)
                entry = cells[row][col]
                entry[mv.shift] = entry.get(mv.shift, 0) + mv.prob
            if table.theta[a]:
                cells[2 * m][col][e] = table.theta[a]
    cells[2 * m][2 * m][e] = 1
    mat = GroupRingMatrix(group, [[GroupRingElement(group, c) for c in r] for r in cells],
                          True, (size, size))
    labels = signed_labels(orbits)
    return OperatorRep(mat, "P", labels, labels, table.k, table.q)


@dataclass(frozen=True)
class TIPair:
    T: OperatorRep
    I: OperatorRep


def build_T_I(X: GCWComplex, k: int) -> TIPair:
    group = X.group
    orbits = X.orbits(k)
    m = len(orbits)
    one = GroupRingElement.one(group)
    zero = GroupRingElement.zero(group)
    T = [[zero] * (2 * m + 1) for _ in range(m)]
    I = [[zero] * m for _ in range(2 * m + 1)]
    for i in range(m):
        T[i][i] = one
        T[i][m + i] = -one
        I[i][i] = one
    labels = signed_labels(orbits)
    return TIPair(
        OperatorRep(GroupRingMatrix(group, T, True, (m, 2 * m + 1)), "T", labels, orbits, k),
        OperatorRep(GroupRingMatrix(group, I, True, (2 * m + 1, m)), "I", orbits, labels, k),
    )


def build_B(X: GCWComplex, k: int, q=None, allow_absorbing: bool = False) -> OperatorRep:
    """B (q=None) or B_q = q Id + (1-q) B, from the direct coefficient formula."""
    dd = degree_quantities(X, k, allow_absorbing=allow_absorbing)
    group = X.group
    orbits = X.orbits(k)
    idx = X.index(k)
    m = len(orbits)
    cells = [[{} for _ in range(m)] for _ in range(m)]
    for alpha, cofaces in X.cofaces(k).items():
        weight = dd.walk_weight(alpha)
        if weight == 0:
            continue
        j = idx[alpha]
        for cf in cofaces:
            for i, f in enumerate(X.faces(k + 1, cf.cell)):
                if i == cf.index:
                    continue
                entry = cells[idx[f.orbit]][j]
                g = tuple(a + b for a, b in zip(cf.shift, f.shift))
                entry[g] = entry.get(g, 0) + Fraction(-cf.coeff * f.coeff, weight)
    B = GroupRingMatrix(group, [[GroupRingElement(group, c) for c in r] for r in cells],
                        True, (m, m))
    if q is None:
        return OperatorRep(B, "B", orbits, orbits, k)
    q = Fraction(q)
    Bq = GroupRingMatrix.identity(group, m).scale(q) + B.scale(1 - q)
    return OperatorRep(Bq, "B_q", orbits, orbits, k, q)


def build_upper_laplacian(X: GCWComplex, k: int, check: bool = True) -> OperatorRep:
    """Upper Laplacian from the coefficient formula, cross-checked against d d*."""
    group = X.group
    orbits = X.orbits(k)
    m = len(orbits)
    if k + 1 > X.dim:
        return OperatorRep(GroupRingMatrix.zeros(group, m, m), "Delta_up", orbits, orbits, k)
    idx = X.index(k)
    cells = [[{} for _ in range(m)] for _ in range(m)]
    for alpha, cofaces in X.cofaces(k).items():
        j = idx[alpha]
        for cf in cofaces:
            diag = cells[j][j]
            diag[group.identity] = diag.get(group.identity, 0) + cf.coeff ** 2
            for i, f in enumerate(X.faces(k + 1, cf.cell)):
                if i == cf.index:
                    continue
                entry = cells[idx[f.orbit]][j]
                g = tuple(a + b for a, b in zip(cf.shift, f.shift))
                # minus d(alpha, alpha', beta)
                entry[g] = entry.get(g, 0) + cf.coeff * f.coeff
    L = GroupRingMatrix(group, [[GroupRingElement(group, c) for c in r] for r in cells],
                        True, (m, m))
    if check:
        dd_star = laplacian_from_boundary(X, k)
        if dd_star != L:
            raise ArithmeticError("upper Laplacian formula disagrees with d d*")
    return OperatorRep(L, "Delta_up", orbits, orbits, k)


def laplacian_from_boundary(X: GCWComplex, k: int) -> GroupRingMatrix:
    d = boundary_matrix(X, k)
    return d @ d.star()


def multiplication_values(X: GCWComplex, k: int, q, allow_absorbing: bool = False):
    dd = degree_quantities(X, k, allow_absorbing=allow_absorbing)
    q = Fraction(q)
    m1, m2 = [], []
    for a in X.orbits(k):
        pm, p2 = dd.walk_weight(a), dd.d_plus2[a]
        den = q * pm + (1 - q) * p2
        m1.append(Fraction(pm) / den)
        m2.append((1 - q) / den)
    return m1, m2


def build_multiplication_ops(X: GCWComplex, k: int, q) -> tuple[OperatorRep, OperatorRep]:
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    m1, m2 = multiplication_values(X, k, q)
    orbits = X.orbits(k)
    return (OperatorRep(GroupRingMatrix.diagonal(X.group, m1), "M1", orbits, orbits, k, q),
            OperatorRep(GroupRingMatrix.diagonal(X.group, m2), "M2", orbits, orbits, k, q))


@dataclass
class IdentityReport:
    holds: bool
    max_defect: Fraction
    checks: dict[str, bool] = field(default_factory=dict)


def verify_theorem_identity(X: GCWComplex, k: int, q) -> IdentityReport:
    """B_q M_1 == Id - Delta_up M_2 in exact arithmetic."""
    q = Fraction(q)
    Bq = build_B(X, k, q).matrix
    L = build_upper_laplacian(X, k).matrix
    M1, M2 = build_multiplication_ops(X, k, q)
    lhs = Bq @ M1.matrix
    rhs = GroupRingMatrix.identity(X.group, len(X.orbits(k))) - L @ M2.matrix
    ok = lhs == rhs
    return IdentityReport(ok, Fraction(0) if ok else lhs.max_abs_diff(rhs), {"theorem": ok})


def verify_lemma_identities(X: GCWComplex, k: int, q, n_max: int,
                            table: TransitionTable | None = None) -> IdentityReport:
    """B_q T = T P_q, B_q = T P_q I and B_q^n = T P_q^n I for n <= n_max."""
    from .walk import build_transitions

    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    q = Fraction(q)
    table = table or build_transitions(X, k, q)
    P = build_P(table).matrix
    ti = build_T_I(X, k)
    T, I = ti.T.matrix, ti.I.matrix
    Bq = build_B(X, k, q).matrix
    checks = {}
    worst = Fraction(0)

    def record(name, a, b):
        nonlocal worst
        ok = a == b
        checks[name] = ok
        if not ok:
            worst = max(worst, a.max_abs_diff(b))

    record("TI=Id", T @ I, GroupRingMatrix.identity(X.group, len(X.orbits(k))))
    TP = T @ P
    record("BqT=TPq", Bq @ T, TP)
    record("Bq=TPqI", Bq, TP @ I)
    # B_q^n and P_q^n I accumulated one factor at a time
    Bn = GroupRingMatrix.identity(X.group, len(X.orbits(k)))
    PnI = I
    for n in range(1, n_max + 1):
        Bn = Bq @ Bn
        PnI = P @ PnI
        record(f"Bq^{n}=TPq^{n}I", Bn, T @ PnI)
    return IdentityReport(all(checks.values()), worst, checks)


def grid_element(text: str) -> GroupRingElement:
    from .group_ring import Group

    return parse_element(text, Group.free_abelian(2))


@dataclass
class EigenstateReport:
    q: Fraction
    q_prime: Fraction
    C1: Fraction
    C2: Fraction
    checks: dict[str, bool]

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def eigenstate_check_grid(q) -> EigenstateReport:
    """Exact checks of the square-boundary eigenstate relations on the Z^2 plane."""
    from .generators import grid2d

    q = Fraction(q)
    X = grid2d()
    G = X.group
    reg = check_upper_k_regular(X, 1)
    c1, c2 = reg.C1(q), reg.C2(q)
    B = build_B(X, 1).matrix
    Bq = build_B(X, 1, q).matrix
    one = GroupRingElement.one(G)
    x_inv = grid_element("x^-1")
    nn = grid_element("x + x^-1 + y + y^-1")
    S = GroupRingMatrix(G, [[grid_element("1 - x")], [grid_element("y - 1")]])
    a_up = GroupRingMatrix(G, [[one], [GroupRingElement.zero(G)]])

    def times(elem, col):
        return GroupRingMatrix(G, [[elem * r[0]] for r in col.entries])

    lam = (nn - 2).scale(Fraction(1, 6))
    q_prime = 1 - 4 * c2
    walk_qp = nn.scale(Fraction(1, 4) * (1 - q_prime)) + q_prime
    checks = {
        "B S = lambda S": B @ S == times(lam, S),
        "q' = (4q-1)/(2q+1)": q_prime == (4 * q - 1) / (2 * q + 1),
        "C1 = 3/(2q+1)": c1 == Fraction(3) / (2 * q + 1),
        "C2 = (1-q)/(2(2q+1))": c2 == (1 - q) / (2 * (2 * q + 1)),
        "C2/C1 = (1-q)/6": c2 / c1 == (1 - q) / 6,
        "lambda_q = C1^-1 C2 (4P + C2^-1 - 4)": (
            q + (1 - q) * lam == (nn + (1 / c2 - 4)).scale(c2 / c1) if c2 else True),
        "P_q' = 4 C2 P + (1 - 4 C2)": walk_qp == nn.scale(c2) + (1 - 4 * c2),
        "B_q S = C1^-1 P_q' S": Bq @ S == times(walk_qp.scale(1 / c1), S),
        "B_q a_up = q a_up + (1-q)/6 (x^-1 S - S + 2 a_up)": Bq @ a_up == (
            a_up.scale(q) + (times(x_inv, S) - S + a_up.scale(2)).scale((1 - q) / 6)),
        "B_q a_up = C1^-1 a_up + C1^-1 C2 (x^-1 - 1) S": Bq @ a_up == (
            a_up.scale(1 / c1) + times((x_inv - 1).scale(c2 / c1), S)),
    }
    return EigenstateReport(q, q_prime, c1, c2, checks)


def verify_simplicial_identity(X: GCWComplex, q) -> IdentityReport:
    """d/(q(d-1)+1) B_q == Id - (1-q)/(q(d-1)+1) Delta_up / deg at k = d-1, d = top dimension."""
    q = Fraction(q)
    d = X.dim
    k = d - 1
    dd = degree_quantities(X, k)
    checks = {
        "d_+ = d_+2 = deg": all(dd.d_plus[a] == dd.d_plus2[a] for a in X.orbits(k)),
        "d_- = d": all(dd.d_minus[a] == d for a in X.orbits(k)),
    }
    scale = Fraction(d) / (q * (d - 1) + 1)
    lhs = build_B(X, k, q).matrix.scale(scale)
    inv_deg = GroupRingMatrix.diagonal(X.group, [Fraction(1, dd.d_plus[a]) for a in X.orbits(k)])
    L = build_upper_laplacian(X, k).matrix @ inv_deg
    rhs = GroupRingMatrix.identity(X.group, len(X.orbits(k))) - L.scale((1 - q) / (q * (d - 1) + 1))
    checks["identity"] = lhs == rhs
    ok = all(checks.values())
    return IdentityReport(ok, Fraction(0) if lhs == rhs else lhs.max_abs_diff(rhs), checks)
