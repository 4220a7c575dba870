"""Traces, spectral density functions, L2-Betti numbers and Novikov-Shubin estimates."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .complex import GCWComplex, check_upper_k_regular, degree_quantities
from .group_ring import (
    DEFAULT_SUPPORT_CAP,
    GroupRingMatrix,
    SupportCapExceeded,
    fourier_evaluate,
    power_traces_float,
)
from .operators import OperatorRep, build_B, build_upper_laplacian
from .walk import ReturnSeries

DEFAULT_EXACT_UNTIL = 64
DENSITY_WINDOW = (1e-2, 1e-1)
WALK_WINDOW = (50, 400)


class IrregularComplex(ValueError):
    pass


class NonPositiveResidual(ValueError):
    pass


def default_resolution(rank: int) -> int:
    return 256 if rank <= 2 else 64


# -- traces -------------------------------------------------------------------

def _int_matrix(mat: GroupRingMatrix):
    den = 1
    for r in mat.entries:
        for e in r:
            for c in e.terms.values():
                den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [[{g: int(c * den) for g, c in e.terms.items()} for e in r] for r in mat.entries]
    return ints, den


def _int_matmul(a, b, support_cap):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    total = 0
    for i in range(rows):
        row = []
        for j in range(cols):
            acc: dict = {}
            get = acc.get
            for l in range(inner):
                x, y = a[i][l], b[l][j]
                if not x or not y:
                    continue
                for g, c in x.items():
                    for h, v in y.items():
                        key = tuple(s + t for s, t in zip(g, h))
                        acc[key] = get(key, 0) + c * v
            acc = {g: c for g, c in acc.items() if c}
            total += len(acc)
            if total > support_cap:
                raise SupportCapExceeded(f"product support exceeds cap of {support_cap} terms")
            row.append(acc)
        out.append(row)
    return out


def exact_power_traces(mat: GroupRingMatrix, n_max: int,
                       support_cap: int = DEFAULT_SUPPORT_CAP) -> list[Fraction]:
    """identity_trace(M^n) for n <= n_max, exactly, via one common denominator."""
    ints, den = _int_matrix(mat)
    size = mat.shape[0]
    e = mat.group.identity
    acc = [[{e: 1} if i == j else {} for j in range(size)] for i in range(size)]
    out = [Fraction(size)]
    for n in range(1, n_max + 1):
        acc = _int_matmul(ints, acc, support_cap)
        out.append(Fraction(sum(acc[i][i].get(e, 0) for i in range(size)), den ** n))
    return out


def trace_power_series(op: OperatorRep | GroupRingMatrix, n_max: int,
                       exact_until: int = DEFAULT_EXACT_UNTIL,
                       support_cap: int = DEFAULT_SUPPORT_CAP) -> ReturnSeries:
    """p(n) = identity_trace(B_q^n); rational for n <= exact_until, float beyond."""
    mat = op.matrix if isinstance(op, OperatorRep) else op
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("trace series needs a square operator")
    n_exact = min(n_max, exact_until) if mat.exact else -1
    values: list = []
    methods: list[str] = []
    if n_exact >= 0:
        values = exact_power_traces(mat, n_exact, support_cap)
        methods = ["exact"] * len(values)
    if n_max > n_exact:
        floats = power_traces_float(mat.to_float() if mat.exact else mat, n_max,
                                    support_cap=support_cap)
        values += [float(v) for v in floats[n_exact + 1:]]
        methods += ["convolution"] * (n_max - n_exact)
    meta = {"q": getattr(op, "q", None), "exact_until": n_exact}
    return ReturnSeries(np.arange(n_max + 1), values,
                        methods if len(set(methods)) > 1 else methods[0], meta=meta)


def torus_grid(rank: int, M: int) -> np.ndarray:
    """Midpoints of a uniform M^rank grid on [-pi, pi)^rank, shape (M^rank, rank)."""
    if M < 2:
        raise ValueError("quadrature resolution must be at least 2")
    ax = -np.pi + (np.arange(M) + 0.5) * (2 * np.pi / M)
    return np.stack(np.meshgrid(*([ax] * rank), indexing="ij"), axis=-1).reshape(-1, rank)


def quadrature_trace_series(op: OperatorRep | GroupRingMatrix, n_max: int, M: int | None = None,
                            chunk: int = 1 << 16) -> np.ndarray:
    """(2 pi)^-d integral of tr(symbol(theta)^n), midpoint rule; dense trace for trivial G."""
    mat = op.matrix if isinstance(op, OperatorRep) else op
    size = mat.shape[0]
    if mat.group.rank == 0:
        a = np.array([[float(e.coeff(())) for e in r] for r in mat.entries])
        out, acc = [float(size)], np.eye(size)
        for _ in range(n_max):
            acc = a @ acc
            out.append(float(np.trace(acc)))
        return np.array(out)
    M = M or default_resolution(mat.group.rank)
    thetas = torus_grid(mat.group.rank, M)
    total = np.zeros(n_max + 1)
    for s in range(0, len(thetas), chunk):
        sym = fourier_evaluate(mat, thetas[s:s + chunk])
        acc = np.broadcast_to(np.eye(size), sym.shape).copy()
        total[0] += len(sym) * size
        for n in range(1, n_max + 1):
            acc = sym @ acc
            total[n] += np.trace(acc, axis1=1, axis2=2).real.sum()
    return total / len(thetas)


# -- spectral density -----------------------------------------------------------

@dataclass
class DensityCurve:
    lambdas: np.ndarray
    F: np.ndarray
    F0: float
    m: int
    M: int | None
    kernel_tol: float
    cells: int = 0
    meta: dict = field(default_factory=dict)

    def rows(self):
        yield {"lambda": 0.0, "F": self.F0}
        for lam, f in zip(self.lambdas, self.F):
            yield {"lambda": float(lam), "F": float(f)}


def default_lambdas() -> np.ndarray:
    return np.geomspace(1e-2, 1.0, 21)


def spectral_density(X: GCWComplex, k: int, lambdas=None, M: int | None = None,
                     scale: float = 1.0, rel_tol: float = 1e-9, resolution: float = 1e-2,
                     max_depth: int = 16, max_cells: int = 4_000_000) -> DensityCurve:
    """F(d_{k+1}^*)(lambda): trace of the spectral projection of the upper Laplacian up to lambda^2.

    ``scale`` multiplies the differential, so the Laplacian is scaled by its
    square.  For Z^d the torus is covered by an M^d midpoint grid; cells whose
    eigenvalue count may change inside them are bisected until their width
    falls below ``resolution * lambda`` for every threshold they straddle.
    """
    lambdas = np.asarray(default_lambdas() if lambdas is None else lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("lambda must be non-negative")
    lap = build_upper_laplacian(X, k).matrix.to_float()
    m = lap.shape[0]
    S = degree_quantities(X, k, allow_absorbing=True).S_k if k + 1 <= X.dim else 0
    s2 = scale * scale
    tol = rel_tol * (S * s2 if S else 1.0)
    thresholds = np.where(lambdas > 0, lambdas ** 2, tol)
    if X.group.rank == 0:
        a = np.array([[e.coeff(()) for e in r] for r in lap.entries], dtype=float) * s2
        mu = np.linalg.eigvalsh(a) if m else np.zeros(0)
        F = (mu[:, None] <= thresholds[None, :]).sum(axis=0).astype(float)
        F0 = float(np.count_nonzero(mu <= tol))
        return DensityCurve(lambdas, F, F0, m, None, tol, meta={"scale": scale})
    M = M or default_resolution(X.group.rank)

    def symbol(th):
        return fourier_evaluate(lap, th) * s2

    all_t = np.concatenate([[tol], thresholds])
    refine_ok = np.concatenate([[False], lambdas > 0])
    counts, cells, truncated = _adaptive_counts(symbol, X.group.rank, m, all_t, refine_ok,
                                                M, resolution, max_depth, max_cells)
    return DensityCurve(lambdas, counts[1:], float(counts[0]), m, M, tol, cells,
                        meta={"scale": scale, "truncated": truncated})


def _adaptive_counts(symbol, d, m, thresholds, refine_ok, M, resolution, max_depth,
                     max_cells, chunk=1 << 15):
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    n_samples = 1 + len(corners)
    t = thresholds
    min_width = resolution * np.sqrt(t)
    centers = torus_grid(d, M)
    half = np.pi / M
    total = np.zeros(len(t))
    cells = 0
    truncated = False
    depth = 0
    while len(centers):
        cells += len(centers)
        nxt = []
        vol = (half / np.pi) ** d
        may_refine = refine_ok & (2 * half > min_width) & (depth < max_depth)
        for s in range(0, len(centers), chunk):
            c = centers[s:s + chunk]
            pts = np.concatenate([c[:, None, :], c[:, None, :] + half * corners[None]], axis=1)
            mu = np.linalg.eigvalsh(symbol(pts.reshape(-1, d))).reshape(len(c), n_samples, m)
            cnt = (mu[..., None] <= t).sum(axis=2)
            amb = cnt.max(axis=1) != cnt.min(axis=1)
            lo, hi = mu.min(axis=1), mu.max(axis=1)
            spread = hi - lo
            near = ((lo - spread)[..., None] <= t) & (t <= (hi + spread)[..., None])
            amb |= near.any(axis=1)
            split = (amb & may_refine).any(axis=1)
            total += cnt[~split, 0, :].sum(axis=0) * vol
            if split.any():
                nxt.append(c[split])
        if not nxt:
            break
        parents = np.concatenate(nxt)
        half /= 2
        depth += 1
        if len(parents) * len(corners) > max_cells:
            truncated = True
            # too many children: count the parents at their centers
            total += _center_counts(symbol, parents, t, m, chunk) * (2 * half / np.pi) ** d
            break
        centers = (parents[:, None, :] + half * corners[None]).reshape(-1, d)
    return total, cells, truncated


def _center_counts(symbol, centers, t, m, chunk):
    out = np.zeros(len(t))
    for s in range(0, len(centers), chunk):
        mu = np.linalg.eigvalsh(symbol(centers[s:s + chunk]))
        out += (mu[..., None] <= t).sum(axis=1).sum(axis=0)
    return out


def l2_betti(density: DensityCurve) -> float:
    return density.F0


# -- Novikov-Shubin estimates -------------------------------------------------

@dataclass
class NSIEstimate:
    alpha_hat: float
    b2_hat: float
    window: tuple[float, float]
    slope: float
    slope_stderr: float
    method: str
    n_points: int
    divergent: bool = False

    @property
    def alpha_stderr(self) -> float:
        return 2 * self.slope_stderr if self.method == "walk" else self.slope_stderr

    def row(self) -> dict:
        return {"method": self.method, "alpha_hat": repr(self.alpha_hat),
                "b2_hat": repr(self.b2_hat), "slope_stderr": repr(self.slope_stderr),
                "window": f"{self.window[0]:g}:{self.window[1]:g}"}


def nsi_from_density(density: DensityCurve, window=DENSITY_WINDOW) -> NSIEstimate:
    """Least-squares slope of log(F(lambda) - F(0)) against log(lambda) on the window."""
    a, b = window
    sel = (density.lambdas >= a) & (density.lambdas <= b) & (density.lambdas > 0)
    if not sel.any():
        raise ValueError(f"no lambda samples inside window {window}")
    lam = density.lambdas[sel]
    excess = density.F[sel] - density.F0
    pos = excess > 0
    if not pos.any():
        return NSIEstimate(math.inf, density.F0, window, math.inf, 0.0, "density", 0, divergent=True)
    if pos.sum() < 2:
        raise ValueError("fewer than two positive points in the density window")
    fit = stats.linregress(np.log(lam[pos]), np.log(excess[pos]))
    return NSIEstimate(float(fit.slope), density.F0, window, float(fit.slope),
                       float(fit.stderr), "density", int(pos.sum()))


def nsi_from_walk(series: ReturnSeries, C1q, b2: float, window=WALK_WINDOW) -> NSIEstimate:
    """Fit C1q^n p(n) - b2 ~ n^-a over the window and return alpha = 2a."""
    if C1q is None:
        raise IrregularComplex("walk-based estimate needs an upper k-regular complex")
    a, b = window
    n = np.asarray(series.n)
    sel = (n >= a) & (n <= b) & (n > 0)
    if sel.sum() < 2:
        raise ValueError(f"series does not cover window {window}")
    ns = n[sel]
    p = np.array([float(series.p[i]) for i in np.flatnonzero(sel)])
    if np.any(p <= 0):
        raise NonPositiveResidual("return quantity is not positive inside the window")
    residual = np.exp(ns * math.log(float(C1q)) + np.log(p)) - b2
    if np.any(residual <= 0):
        raise NonPositiveResidual(
            "C1q^n p(n) - b2 is not positive in the window: b2 too large or n too small")
    fit = stats.linregress(np.log(ns), np.log(residual))
    return NSIEstimate(float(-2 * fit.slope), b2, (a, b), float(fit.slope), float(fit.stderr),
                       "walk", int(sel.sum()))


@dataclass
class WalkNSIResult:
    estimate: NSIEstimate
    series: ReturnSeries
    C1q: Fraction
    q0: Fraction


def estimate_nsi_walk(X: GCWComplex, k: int, q, b2: float, n_max: int | None = None,
                      window=WALK_WINDOW, exact_until: int = 0, strict: bool = True,
                      support_cap: int = DEFAULT_SUPPORT_CAP) -> WalkNSIResult:
    """Walk-side Novikov-Shubin estimate from exact convolution powers of B_q."""
    q = Fraction(q)
    dd = degree_quantities(X, k)
    reg = check_upper_k_regular(X, k, dd)
    if not reg.regular:
        raise IrregularComplex("complex is not upper k-regular")
    if strict and not dd.q0 <= q < 1:
        raise ValueError(f"q = {q} outside [q0, 1) = [{dd.q0}, 1)")
    C1 = reg.C1(q)
    Bq = build_B(X, k, q)
    series = trace_power_series(Bq, n_max or int(window[1]), exact_until, support_cap)
    return WalkNSIResult(nsi_from_walk(series, C1, b2, window), series, C1, dd.q0)
