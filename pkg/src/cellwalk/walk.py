"""The q-lazy degree-k upper random walk on oriented k-cells plus an absorbing state."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .complex import DegenerateCell, GCWComplex, degree_quantities
from .group_ring import DEFAULT_SUPPORT_CAP, SupportCapExceeded

CHUNK = 1 << 16


class WalkState(NamedTuple):
    orbit: str | None
    shift: tuple[int, ...]
    sign: int

    @property
    def is_theta(self) -> bool:
        return self.orbit is None

    def __repr__(self):
        if self.orbit is None:
            return "Theta"
        return f"{'+' if self.sign > 0 else '-'}{self.orbit}@{self.shift}"


THETA = WalkState(None, (), 0)


class Move(NamedTuple):
    orbit: str
    shift: tuple[int, ...]
    sign: int
    prob: Fraction


@dataclass(frozen=True)
class TransitionTable:
    """Moves out of each k-orbit representative with positive orientation.

    ``moves`` exclude the lazy stay (probability ``q``) and Theta
    (``theta``).  Moves from the negatively oriented cell are the same with
    target signs flipped.
    """

    complex: GCWComplex
    k: int
    q: Fraction
    moves: dict[str, tuple[Move, ...]]
    theta: dict[str, Fraction]

    @property
    def orbits(self) -> tuple[str, ...]:
        return self.complex.orbits(self.k)

    def outgoing(self, state: WalkState):
        """(target, probability) pairs from ``state``; the lazy stay included."""
        if state.is_theta:
            return [(THETA, Fraction(1))]
        out = []
        if self.q:
            out.append((state, self.q))
        for mv in self.moves[state.orbit]:
            out.append((WalkState(mv.orbit, tuple(a + b for a, b in zip(state.shift, mv.shift)),
                                  state.sign * mv.sign), mv.prob))
        if self.theta[state.orbit]:
            out.append((THETA, self.theta[state.orbit]))
        return out


def build_transitions(X: GCWComplex, k: int, q=0, allow_absorbing: bool = False) -> TransitionTable:
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ValueError("laziness q must lie in [0, 1]")
    dd = degree_quantities(X, k, allow_absorbing=allow_absorbing)
    moves, theta = {}, {}
    for alpha, cofaces in X.cofaces(k).items():
        weight = dd.walk_weight(alpha)
        if weight == 0:
            moves[alpha] = ()
            theta[alpha] = 1 - q
            continue
        acc: dict[tuple[str, tuple[int, ...], int], Fraction] = {}
        for cf in cofaces:
            for i, f in enumerate(X.faces(k + 1, cf.cell)):
                if i == cf.index:
                    continue
                d = -cf.coeff * f.coeff
                target = (f.orbit, tuple(a + b for a, b in zip(cf.shift, f.shift)), 1 if d > 0 else -1)
                acc[target] = acc.get(target, 0) + abs(d)
        scale = (1 - q) / weight
        mv = tuple(Move(o, s, sg, scale * w) for (o, s, sg), w in sorted(acc.items()) if w)
        rest = 1 - q - sum((m.prob for m in mv), Fraction(0))
        if rest < 0:
            raise ArithmeticError(f"negative absorption probability at {alpha!r}")
        moves[alpha] = mv
        theta[alpha] = rest
    return TransitionTable(X, k, q, moves, theta)


@dataclass
class ReturnSeries:
    """n -> (p_plus, p_minus, p); ``p_plus``/``p_minus`` may be absent for trace series."""

    n: np.ndarray
    p: list
    method: str
    p_plus: list | None = None
    p_minus: list | None = None
    stderr: np.ndarray | None = None
    stderr_plus: np.ndarray | None = None
    stderr_minus: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.p])

    def rows(self):
        for i, n in enumerate(self.n):
            yield {
                "n": int(n),
                "p_plus": "" if self.p_plus is None else _fmt(self.p_plus[i]),
                "p_minus": "" if self.p_minus is None else _fmt(self.p_minus[i]),
                "p": _fmt(self.p[i]),
                "stderr": "" if self.stderr is None else _fmt(self.stderr[i]),
                "method": self.method if not isinstance(self.method, list) else self.method[i],
            }


def _fmt(v) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class WalkRunConfig:
    q: Fraction
    steps: int
    walkers: int
    seed: int = 0
    start: str | None = None

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValueError("q must lie in [0, 1]")
        if self.walkers < 1:
            raise ValueError("need at least one walker")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")


def exact_distribution(table: TransitionTable, start: WalkState, n: int, exact: bool = True,
                       support_cap: int = DEFAULT_SUPPORT_CAP) -> dict[WalkState, Fraction | float]:
    """Law of the walk after ``n`` steps on the lifted state space."""
    if n < 0:
        raise ValueError("n must be non-negative")
    dist = {start: Fraction(1) if exact else 1.0}
    for _ in range(n):
        dist = _push(table, dist, exact, support_cap)
    return dist


def _kernel(table: TransitionTable, exact: bool):
    conv = (lambda x: x) if exact else float
    ker = {}
    for a in table.orbits:
        lst = [(m.orbit, m.shift, m.sign, conv(m.prob)) for m in table.moves[a]]
        ker[a] = (conv(table.q), lst, conv(table.theta[a]))
    return ker


def _push(table, dist, exact, support_cap, kernel=None):
    ker = kernel or _kernel(table, exact)
    out: dict = {}
    get = out.get
    for st, mass in dist.items():
        if st.orbit is None:
            out[THETA] = get(THETA, 0) + mass
            continue
        q, lst, th = ker[st.orbit]
        if q:
            out[st] = get(st, 0) + q * mass
        for o, s, sg, p in lst:
            t = WalkState(o, tuple(a + b for a, b in zip(st.shift, s)), st.sign * sg)
            out[t] = get(t, 0) + p * mass
        if th:
            out[THETA] = get(THETA, 0) + th * mass
    if len(out) > support_cap:
        raise SupportCapExceeded(f"distribution support exceeds {support_cap} states")
    return out


def exact_return_series(table: TransitionTable, n_max: int, start: str | None = None,
                        exact: bool = True, support_cap: int = DEFAULT_SUPPORT_CAP) -> ReturnSeries:
    """p_plus, p_minus, p for one start orbit, or summed over all orbits when ``start`` is None."""
    starts = [start] if start is not None else list(table.orbits)
    e = table.complex.group.identity
    zero = Fraction(0) if exact else 0.0
    plus = [zero] * (n_max + 1)
    minus = [zero] * (n_max + 1)
    ker = _kernel(table, exact)
    for a in starts:
        home, away = WalkState(a, e, 1), WalkState(a, e, -1)
        dist = {home: Fraction(1) if exact else 1.0}
        for n in range(n_max + 1):
            if n:
                dist = _push(table, dist, exact, support_cap, ker)
            plus[n] += dist.get(home, zero)
            minus[n] += dist.get(away, zero)
    p = [a - b for a, b in zip(plus, minus)]
    return ReturnSeries(np.arange(n_max + 1), p, "exact" if exact else "exact_float",
                        p_plus=plus, p_minus=minus, meta={"start": start, "q": table.q})


def _alias(probs: np.ndarray):
    """Walker/Vose alias table for a discrete distribution."""
    k = len(probs)
    scaled = probs * k / probs.sum()
    accept = np.ones(k)
    alias = np.arange(k)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return accept, alias


class _Sampler:
    """Per-orbit alias tables over outcomes [stay, moves..., Theta], padded to a common width."""

    def __init__(self, table: TransitionTable):
        orbits = table.orbits
        self.index = {a: i for i, a in enumerate(orbits)}
        d = table.complex.group.rank
        width = max(len(table.moves[a]) for a in orbits) + 2
        m = len(orbits)
        self.accept = np.zeros((m, width))
        self.alias = np.zeros((m, width), dtype=np.int64)
        self.target = np.zeros((m, width), dtype=np.int64)
        self.shift = np.zeros((m, width, d), dtype=np.int64)
        self.flip = np.ones((m, width), dtype=np.int8)
        self.kill = np.zeros((m, width), dtype=bool)
        self.width = width
        for i, a in enumerate(orbits):
            probs = np.zeros(width)
            probs[0] = float(table.q)
            self.target[i, 0] = i
            for j, mv in enumerate(table.moves[a], start=1):
                probs[j] = float(mv.prob)
                self.target[i, j] = self.index[mv.orbit]
                self.shift[i, j] = mv.shift
                self.flip[i, j] = mv.sign
            probs[width - 1] = float(table.theta[a])
            self.kill[i, width - 1] = True
            self.target[i, width - 1] = i
            self.accept[i], self.alias[i] = _alias(probs)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CELLWALK_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def simulate(table: TransitionTable, cfg: WalkRunConfig) -> ReturnSeries:
    """Monte Carlo estimate of return quantities from one start orbit.

    Walkers are processed in fixed chunks of ``CHUNK``; chunk ``c`` draws from
    a Philox stream keyed by ``(seed, c)``, so results do not depend on the
    number of worker threads.
    """
    if Fraction(cfg.q) != table.q:
        raise ValueError("run config q differs from the transition table")
    start = cfg.start or table.orbits[0]
    sampler = _Sampler(table)
    s0 = sampler.index[start]
    n_chunks = -(-cfg.walkers // CHUNK)

    def run(c):
        size = min(CHUNK, cfg.walkers - c * CHUNK)
        return _run_chunk(sampler, s0, size, cfg.steps,
                          np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, c]))))

    with ThreadPoolExecutor(max_workers=min(_threads(), n_chunks)) as pool:
        parts = list(pool.map(run, range(n_chunks)))
    plus = np.zeros(cfg.steps + 1, dtype=np.int64)
    minus = np.zeros(cfg.steps + 1, dtype=np.int64)
    for hp, hm in parts:
        plus += hp
        minus += hm
    N = cfg.walkers
    pp, pm = plus / N, minus / N
    p = pp - pm
    var_p = np.maximum(pp + pm - p ** 2, 0.0)
    return ReturnSeries(
        np.arange(cfg.steps + 1), list(p), "monte_carlo",
        p_plus=list(pp), p_minus=list(pm),
        stderr=np.sqrt(var_p / N),
        stderr_plus=np.sqrt(pp * (1 - pp) / N),
        stderr_minus=np.sqrt(pm * (1 - pm) / N),
        meta={"start": start, "q": table.q, "walkers": N, "seed": cfg.seed},
    )


def _run_chunk(sp: _Sampler, s0: int, size: int, steps: int, rng: np.random.Generator):
    d = sp.shift.shape[2]
    orbit = np.full(size, s0, dtype=np.int64)
    shift = np.zeros((size, d), dtype=np.int64)
    sign = np.ones(size, dtype=np.int8)
    alive = np.ones(size, dtype=bool)
    plus = np.zeros(steps + 1, dtype=np.int64)
    minus = np.zeros(steps + 1, dtype=np.int64)
    plus[0] = size
    for n in range(1, steps + 1):
        u = rng.random((2, size))
        col = np.minimum((u[0] * sp.width).astype(np.int64), sp.width - 1)
        take = u[1] < sp.accept[orbit, col]
        col = np.where(take, col, sp.alias[orbit, col])
        alive &= ~sp.kill[orbit, col]
        if d:
            shift += sp.shift[orbit, col]
        sign *= sp.flip[orbit, col]
        orbit = sp.target[orbit, col]
        home = alive & (orbit == s0)
        if d:
            home &= ~shift.any(axis=1)
        plus[n] = np.count_nonzero(home & (sign > 0))
        minus[n] = np.count_nonzero(home & (sign < 0))
    return plus, minus
