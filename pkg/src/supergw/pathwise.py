"""Pathwise construction of a supercritical forest walk from its tilted walk.

The walk of a supercritical forest is rebuilt from three independent
ingredients: the subcritical (tilted) walk that explores the finite trees,
the number ``G`` of finite trees before the first infinite one, and the
spine pairs ``(B_i, N_i)``: number of children ``N_i`` of the i-th vertex on
the leftmost infinite line of descent and number ``B_i`` of mortal older
siblings of the next spine vertex. The result has exactly the law of the
i.i.d. walk with steps ``D - 1``, which :func:`sample_direct` draws directly.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import walk
from .laws import OffspringLaw, TabulatedLaw, TiltRoot, find_xi, tilt
from .rng import stream

MAX_HORIZON = 10**7


class HorizonOverflow(ValueError):
    pass


@dataclass(frozen=True)
class SpinePair:
    b: int
    n_children: int

    def __post_init__(self):
        if not 0 <= self.b < self.n_children:
            raise ValueError(f"invalid spine pair {self}")


@dataclass(frozen=True)
class PathwiseBundle:
    """Jointly built sequences, all indexed by visit time ``k``.

    ``s`` and ``s_minus_ffinf`` have ``horizon + 2`` entries, ``h`` has
    ``horizon + 1``; ``f[k]`` counts spine vertices visited before ``k``;
    ``q[l], d[l]`` are ``G`` plus the partial sums of ``N`` and ``B``.
    """
    horizon: int
    g: int
    b: np.ndarray
    n_children: np.ndarray
    s: np.ndarray
    s_minus_ffinf: np.ndarray
    h: np.ndarray
    f: np.ndarray
    q: np.ndarray
    d: np.ndarray

    @property
    def pairs(self) -> list[SpinePair]:
        used = int(self.f[-1])
        return [SpinePair(int(x), int(y)) for x, y in zip(self.b[:used], self.n_children[:used])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,S,S_minus_ffinf,H,F\n")
        for k in range(self.s.size):
            hk = str(int(self.h[k])) if k < self.h.size else ""
            buf.write(f"{k},{int(self.s[k])},{int(self.s_minus_ffinf[k])},{hk},{int(self.f[k])}\n")
        return buf.getvalue()


@njit(cache=True)
def _assemble(hat_steps, g, b, nn, horizon):
    K = hat_steps.shape[0]
    shat = np.zeros(K + 1, dtype=np.int64)
    for i in range(K):
        shat[i + 1] = shat[i] + hat_steps[i]
    ihat = np.empty(K + 1, dtype=np.int64)
    m = 0
    for i in range(K + 1):
        if shat[i] < m:
            m = shat[i]
        ihat[i] = m
    hhat = walk._heights(shat)

    npairs = b.shape[0]
    d = np.empty(npairs + 1, dtype=np.int64)
    q = np.empty(npairs + 1, dtype=np.int64)
    d[0] = g
    q[0] = g
    for l in range(npairs):
        d[l + 1] = d[l] + b[l]
        q[l + 1] = q[l] + nn[l]

    L = horizon + 2
    f = np.zeros(L, dtype=np.int64)
    s = np.zeros(L, dtype=np.int64)
    sm = np.zeros(L, dtype=np.int64)
    h = np.zeros(L - 1, dtype=np.int64)
    cur = 0
    for k in range(L):
        # spine vertex cur+1 has been visited before k once the tilted walk,
        # run for the k-1-cur off-spine steps, has reached -d[cur]
        while cur <= k - 1 and -ihat[k - 1 - cur] >= d[cur]:
            cur += 1
        f[k] = cur
        j = k - cur
        s[k] = -g + shat[j] + q[cur] - cur
        sm[k] = shat[j] + d[cur]
        if k < L - 1:
            h[k] = hhat[j] + cur
    return s, sm, h, f, q, d


class PathwiseSampler:
    """Caches the tilt root, the tilted law and the spine-pair marginal of a law."""

    def __init__(self, law: TabulatedLaw, root: TiltRoot | None = None, max_horizon: int = MAX_HORIZON):
        self.law = law
        self.root = root if root is not None else find_xi(law)
        self.tilted = tilt(law, self.root)
        self.max_horizon = max_horizon
        q = self.root.q
        k = np.arange(law.K + 1, dtype=np.float64)
        # P(N=k) = (1 - q^k) / (1 - q) * P(D=k)
        tab = -np.expm1(k * np.log(q)) / (1.0 - q) * law.table
        sf = None
        if law.tail_sf is not None:
            # the q^k correction is below exp(-xi K) beyond the table
            sf = lambda kk, base=law.tail_sf, den=1.0 - q: base(kk) / den
        self.n_law = TabulatedLaw(f"spine_n({law.name})", tab, tail_sf=sf)

    # -- ingredients ----------------------------------------------------------
    def sample_g(self, rng, size=None):
        """``P(G=k) = q^k (1-q)``, ``k >= 0``."""
        return rng.geometric(1.0 - self.root.q, size) - 1

    def sample_pairs(self, rng, size):
        n = self.n_law.sample(rng, size)
        u = rng.random(size)
        logq = -self.root.xi
        # inverse cdf of P(B=k | N=l) = q^k (1-q) / (1 - q^l), k < l
        b = np.floor(np.log1p(-u * -np.expm1(n * logq)) / logq).astype(np.int64)
        return np.minimum(b, n - 1), n

    # -- builds ---------------------------------------------------------------
    def build(self, horizon: int, seed: int, replica: int = 0) -> PathwiseBundle:
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if horizon > self.max_horizon:
            raise HorizonOverflow(f"horizon {horizon} exceeds cap {self.max_horizon}")
        K = horizon + 1
        hat = self.tilted.sample(stream(seed, "pathwise", replica, "tilted"), K) - 1
        g = int(self.sample_g(stream(seed, "pathwise", replica, "g")))
        b, n = self.sample_pairs(stream(seed, "pathwise", replica, "pairs"), K)
        s, sm, h, f, q, d = _assemble(hat.astype(np.int64), g, b, n.astype(np.int64), horizon)
        return PathwiseBundle(horizon, g, b, n, s, sm, h, f, q, d)


def sample_geometric_tree_count(root: TiltRoot, seed, size=None):
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "g")
    return rng.geometric(1.0 - root.q, size) - 1


def sample_spine_pair(law: TabulatedLaw, root: TiltRoot, seed, size: int | None = None):
    """One :class:`SpinePair` (or arrays ``(b, n)`` when ``size`` is given)."""
    sampler = PathwiseSampler(law, root)
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "pairs")
    b, n = sampler.sample_pairs(rng, 1 if size is None else size)
    if size is None:
        return SpinePair(int(b[0]), int(n[0]))
    return b, n


def spine_pair_pmf(law: TabulatedLaw, root: TiltRoot, b: int, n: int) -> float:
    """``P(B=b, N=n) = exp(-b xi) P(D=n)`` for ``b < n``."""
    if not 0 <= b < n:
        return 0.0
    return float(np.exp(-b * root.xi) * law.pmf(n))


def build_pathwise(law: TabulatedLaw, horizon: int, seed: int, replica: int = 0) -> PathwiseBundle:
    return PathwiseSampler(law).build(horizon, seed, replica)


def sample_direct(law: OffspringLaw, horizon: int, seed: int, replica: int = 0):
    """I.i.d. walk with steps ``D - 1``; returns ``(S, H)`` with the bundle's lengths."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    steps = law.sample(stream(seed, "direct", replica), horizon + 1) - 1
    s = walk.path_from_steps(steps)
    return s, walk.height_process(s)
