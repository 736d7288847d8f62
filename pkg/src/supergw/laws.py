"""Offspring laws, the tilting root and the tilted (subcritical) law.

A law exposes ``pmf``, ``mean``, ``pgf``, ``laplace_step(theta) =
E[exp(-theta (D - 1))]`` and ``sample``. Tabulated laws keep an immutable
pmf table; laws with a heavy tail additionally carry the exact survival
function of the tail, which is used to sample beyond the table by inversion,
so no truncation bias is introduced.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy import optimize, special, stats

from .rng import as_generator

TAIL_EPS = 1e-14
NORM_TOL = 1e-10
MAX_TABLE = 1 << 20


class SubcriticalLaw(ValueError):
    """The law has mean <= 1, so the step transform has no positive root."""


class NonBracketable(RuntimeError):
    pass


class NormalizationDrift(RuntimeError):
    pass


class SeriesTruncation(RuntimeError):
    pass


class InvalidWindow(ValueError):
    """Percolation probability outside (0, 1]."""


@dataclass(frozen=True)
class TiltRoot:
    xi: float

    def __post_init__(self):
        if not (self.xi > 0 and np.isfinite(self.xi)):
            raise ValueError(f"tilt root must be positive and finite, got {self.xi}")

    @property
    def q(self) -> float:
        """exp(-xi): the probability that a single tree is finite."""
        return float(np.exp(-self.xi))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class OffspringLaw:
    """Common interface. Subclasses set ``name``, ``mean`` and implement
    ``pgf`` and ``sample``."""

    name: str = "law"
    mean: float
    tail_spec: tuple[float, float] | None = None

    def pgf(self, x):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    def pmf(self, k):
        raise NotImplementedError

    def step_transform_minus_one(self, theta: float) -> float:
        """``E[exp(-theta (D-1))] - 1`` (subclasses avoid cancellation)."""
        x = np.exp(-theta)
        return float(self.pgf(x) / x - 1.0)

    def laplace_step(self, theta: float) -> float:
        if theta < 0:
            raise ValueError("laplace_step is only evaluated at theta >= 0")
        return 1.0 + self.step_transform_minus_one(theta)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class TabulatedLaw(OffspringLaw):
    """Law given by a pmf table ``P(D=k), k=0..K`` plus an optional exact tail.

    ``tail_sf(k)`` must return ``P(D >= k)`` for integers ``k > K``. Without
    it the table is taken to be the whole law (mass beyond it below 1e-14).
    """

    def __init__(self, name, table, tail_sf: Callable | None = None, mean=None,
                 tail_spec=None, second_moment=None):
        self.name = name
        self.table = _frozen(table)
        if self.table.ndim != 1 or self.table.size == 0 or self.table.min() < 0:
            raise ValueError("pmf table must be a nonempty nonnegative vector")
        self.K = self.table.size - 1
        self.tail_sf = tail_sf
        self.tail_mass = float(tail_sf(self.K + 1)) if tail_sf is not None else 0.0
        total = self.table.sum() + self.tail_mass
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationDrift(f"{name}: pmf sums to {total!r}")
        self.cdf = _frozen(np.cumsum(self.table))
        self._support = np.arange(self.K + 1, dtype=np.float64)
        self.mean = float(mean) if mean is not None else float(self._support @ self.table)
        if second_moment is None and tail_sf is None:
            second_moment = float(self._support ** 2 @ self.table)
        self.second_moment = second_moment
        self.tail_spec = tail_spec

    # -- evaluation -----------------------------------------------------
    def pmf(self, k):
        k = np.asarray(k, dtype=np.int64)
        out = np.zeros(k.shape, dtype=np.float64)
        inside = (k >= 0) & (k <= self.K)
        out[inside] = self.table[k[inside]]
        beyond = k > self.K
        if beyond.any() and self.tail_sf is not None:
            kb = k[beyond]
            out[beyond] = self.tail_sf(kb) - self.tail_sf(kb + 1)
        return out if out.ndim else float(out)

    def pgf(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any((x < 0) | (x > 1)):
            raise ValueError("pgf evaluated on [0, 1] only")
        vals = np.polynomial.polynomial.polyval(x, self.table)
        # remaining mass sits beyond K; x^(K+1) * tail mass bounds its contribution
        return vals + self.tail_mass * x ** (self.K + 1)

    def step_transform_minus_one(self, theta: float) -> float:
        with np.errstate(over="ignore"):
            w = np.expm1(-theta * (self._support - 1.0))
        tail = -self.tail_mass * (-np.expm1(-theta * self.K)) if self.tail_mass else 0.0
        head = 0.0
        if self.table[0] > 0:
            if w[0] == np.inf:
                return np.inf
            head = self.table[0] * w[0]
        return float(self.table[1:] @ w[1:] + head + tail)

    def sample(self, rng, size=None):
        rng = as_generator(rng, "law", self.name)
        u = rng.random(size)
        k = np.searchsorted(self.cdf, u, side="right").astype(np.int64)
        over = k > self.K
        if np.any(over):
            if self.tail_sf is None:
                # rounding leftover of a complete table
                k = np.minimum(k, self.K)
            else:
                uo = np.atleast_1d(u)[np.atleast_1d(over)]
                draws = np.array([self._invert_tail(v) for v in uo], dtype=np.int64)
                if np.ndim(k):
                    k[over] = draws
                else:
                    k = draws[0]
        return k

    def _invert_tail(self, u: float) -> int:
        # smallest k > K with P(D <= k) >= u, i.e. tail_sf(k+1) <= 1 - u
        target = 1.0 - u
        lo, hi = self.K, self.K + 1
        while self.tail_sf(hi + 1) > target:
            lo, hi = hi, 2 * hi
            if hi > 1 << 62:
                return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.tail_sf(mid + 1) > target:
                lo = mid
            else:
                hi = mid
        return hi

    def size_biased(self) -> "TabulatedLaw":
        """The law ``k P(D=k) / E[D]``."""
        if self.tail_sf is not None:
            raise NotImplementedError("size-biasing a heavy tail needs its first-moment tail")
        return TabulatedLaw(f"sb({self.name})", self._support * self.table / self.mean)

    def size_biased_child_pgf(self, y):
        """pgf of ``D~ - 1``: ``psi'(y) / E[D]``."""
        y = np.asarray(y, dtype=np.float64)
        coef = self._support[1:] * self.table[1:] / self.mean
        rem = 1.0 - coef.sum()
        if rem > 1e-12 and np.any(y ** self.K * rem > 1e-12):
            raise SeriesTruncation(f"{self.name}: size-biased tail mass {rem:.3g} unmet")
        return np.polynomial.polynomial.polyval(y, coef)


class PowerLaw(TabulatedLaw):
    """``P(D=k) = c k^{-(alpha+2)}`` for ``k >= kmin`` and the leftover mass
    ``1 - c zeta(alpha+2, kmin)`` at ``k = 1``.

    ``c=None`` picks the normalizing constant (no atom at 1).
    """

    def __init__(self, alpha: float, kmin: int = 2, c: float | None = None):
        if not 1.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (1, 2)")
        kmin = int(kmin)
        if kmin < 1:
            raise ValueError("kmin must be >= 1")
        s = alpha + 2.0
        z = float(special.zeta(s, kmin))
        c = 1.0 / z if c is None else float(c)
        atom = 1.0 - c * z
        if atom < -1e-12 or (kmin == 1 and abs(atom) > 1e-12):
            raise ValueError(f"c={c} leaves negative or unplaceable mass {atom}")
        atom = max(atom, 0.0)
        self.alpha, self.kmin, self.c, self.atom = float(alpha), kmin, c, atom

        # table up to the index where the tail drops below TAIL_EPS (capped)
        K = kmin
        while c * special.zeta(s, K + 1) > TAIL_EPS and K < MAX_TABLE:
            K *= 2
        K = min(K, MAX_TABLE)
        k = np.arange(K + 1, dtype=np.float64)
        table = np.zeros(K + 1)
        table[kmin:] = c * k[kmin:] ** -s
        table[1] += atom
        mean = atom + c * float(special.zeta(s - 1, kmin))
        second = atom + c * float(special.zeta(s - 2, kmin))
        name = f"power_law(alpha={alpha:g},kmin={kmin},c={c:.10g})"
        super().__init__(name, table, tail_sf=self._sf, mean=mean,
                         tail_spec=(c, float(alpha)), second_moment=second)

    def _sf(self, k):
        k = np.maximum(np.asarray(k, dtype=np.float64), self.kmin)
        return self.c * special.zeta(self.alpha + 2.0, k)

    def pgf(self, x):
        return _vectorize(self._pgf1)(x)

    def _pgf1(self, x):
        if x == 0:
            return 0.0
        s = self.alpha + 2.0
        return float(self.atom * x + self.c * x ** self.kmin * mpmath.lerchphi(x, s, self.kmin))

    def size_biased_child_pgf(self, y):
        """pgf of ``D~ - 1`` in closed form through the Lerch transcendent."""
        return _vectorize(self._sb_child1)(y)

    def _sb_child1(self, y):
        s = self.alpha + 1.0
        series = 0.0 if y == 0 and self.kmin > 1 else float(
            self.c * y ** (self.kmin - 1) * mpmath.lerchphi(y, s, self.kmin))
        return (self.atom + series) / self.mean

    def size_biased(self) -> TabulatedLaw:
        s = self.alpha + 1.0
        mu = self.mean
        tab = self._support * self.table / mu
        # exact tail of the size-biased law
        def sf(k, c=self.c, kmin=self.kmin):
            k = np.maximum(np.asarray(k, dtype=np.float64), kmin)
            return c * special.zeta(s, k) / mu

        K = self.K
        if sf(K + 1) > TAIL_EPS and K < MAX_TABLE:
            K = MAX_TABLE
            k = np.arange(K + 1, dtype=np.float64)
            tab = np.zeros(K + 1)
            tab[self.kmin:] = self.c * k[self.kmin:] ** -(self.alpha + 1.0) / mu
            tab[1] += self.atom / mu
        return TabulatedLaw(f"sb({self.name})", tab, tail_sf=sf, mean=self.second_moment / mu,
                            tail_spec=(self.c / mu, self.alpha - 1.0))


def _vectorize(f):
    def g(x):
        arr = np.asarray(x, dtype=np.float64)
        if np.any((arr < 0) | (arr > 1)):
            raise ValueError("pgf evaluated on [0, 1] only")
        out = np.array([f(float(v)) for v in arr.reshape(-1)]).reshape(arr.shape)
        return out if out.ndim else float(out)
    return g


# -- simple families ------------------------------------------------------

def binary(p_zero: float) -> TabulatedLaw:
    """``P(D=0) = p_zero``, ``P(D=2) = 1 - p_zero``."""
    if not 0.0 <= p_zero <= 1.0:
        raise ValueError("binary: p must lie in [0, 1]")
    return TabulatedLaw(f"binary({p_zero:g})", [p_zero, 0.0, 1.0 - p_zero])


def geometric(mean: float) -> TabulatedLaw:
    """``P(D=k) = (1/(1+m)) (m/(1+m))^k`` with mean ``m``."""
    if mean <= 0:
        raise ValueError("geometric: mean must be positive")
    r = mean / (1.0 + mean)
    K = int(np.ceil(np.log(TAIL_EPS * 1e-2) / np.log(r)))
    k = np.arange(K + 1)
    tab = (1.0 - r) * r ** k
    tab[-1] += r ** (K + 1)  # fold the leftover below-eps tail into the last cell
    return TabulatedLaw(f"geometric({mean:g})", tab, mean=mean)


def dirac(k: int) -> TabulatedLaw:
    tab = np.zeros(int(k) + 1)
    tab[int(k)] = 1.0
    return TabulatedLaw(f"dirac({k})", tab)


def from_pmf(pmf, name="custom") -> TabulatedLaw:
    return TabulatedLaw(name, pmf)


# -- percolation ------------------------------------------------------------

def window_probability(mu: float, rho: float, alpha: float, lam: float, n: int) -> float:
    """Half-edge retention probability putting the size-biased percolated
    mean at ``2 + lam n^{-(alpha-1)/(alpha+1)}``."""
    ratio = rho / mu - 1.0
    if ratio <= 0:
        raise InvalidWindow("rho/mu - 1 must be positive")
    p = (1.0 + lam * n ** (-(alpha - 1.0) / (alpha + 1.0))) / ratio
    if not 0.0 < p <= 1.0:
        raise InvalidWindow(f"percolation probability {p} outside (0, 1]"
                            + ("; the base law needs rho > 2 mu" if ratio <= 1 else ""))
    return float(p)


class PercolatedLaw(OffspringLaw):
    """``B = Binomial(D, p)``: every half-edge of a base degree kept w.p. ``p``."""

    def __init__(self, base: TabulatedLaw, p: float):
        if not 0.0 < p <= 1.0:
            raise InvalidWindow(f"p={p} outside (0, 1]")
        self.base, self.p = base, float(p)
        self.name = f"percolated({base.name},p={p:.12g})"
        self.mean = self.p * base.mean
        rho = base.second_moment
        self.second_moment = self.p ** 2 * (rho - base.mean) + self.p * base.mean
        if base.tail_spec is not None:
            c, a = base.tail_spec
            self.tail_spec = (c * self.p ** (a + 1.0), a)

    def pgf(self, x):
        return self.base.pgf(1.0 - self.p + self.p * np.asarray(x, dtype=np.float64))

    def laplace(self, theta):
        """``E[exp(-theta B)] = E[exp(D log(1 - p + p e^{-theta}))]``."""
        return self.pgf(np.exp(-np.asarray(theta, dtype=np.float64)))

    def pmf(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        kmax = int(k.max()) if k.size else 0
        # base degrees far above kmax / p contribute below exp(-50) relative
        dmax = int(np.ceil((kmax + 10.0 * np.sqrt(kmax + 1.0) + 50.0) / self.p))
        d = np.arange(min(self.base.K, dmax) + 1)
        w = self.base.table[: d.size]
        out = np.array([w @ stats.binom.pmf(kk, d, self.p) for kk in k])
        return out if out.size > 1 else float(out[0])

    def sample(self, rng, size=None):
        rng = as_generator(rng, "law", self.name)
        d = self.base.sample(rng, size)
        return rng.binomial(d, self.p)

    def size_biased_child(self) -> "ThinnedSizeBiasedChild":
        return ThinnedSizeBiasedChild(self.base, self.p)


class ThinnedSizeBiasedChild(OffspringLaw):
    """Law of ``B~ - 1 = Binomial(D~ - 1, p)`` where ``D~`` is size-biased ``D``.

    This is the offspring law whose walk has steps ``Z - 2`` with ``Z`` the
    size-biased percolated degree.
    """

    def __init__(self, base: TabulatedLaw, p: float):
        self.base, self.p = base, float(p)
        self.sb = base.size_biased()
        self.name = f"sbchild({base.name},p={p:.12g})"
        self.mean = self.p * (base.second_moment / base.mean - 1.0)

    def pgf(self, x):
        return self.base.size_biased_child_pgf(1.0 - self.p + self.p * np.asarray(x, dtype=np.float64))

    def sample(self, rng, size=None):
        rng = as_generator(rng, "law", self.name)
        d = self.sb.sample(rng, size)
        return rng.binomial(d - 1, self.p)

    def sample_size_biased_degree(self, rng, size=None):
        """``Z = 1 + Binomial(D~ - 1, p)``."""
        return 1 + self.sample(rng, size)


# -- tilting ------------------------------------------------------------------

def find_xi(law: OffspringLaw) -> TiltRoot:
    """Unique positive root of ``laplace_step(theta) = 1``."""
    if law.mean <= 1.0 + 1e-12:
        raise SubcriticalLaw(f"{law.name}: mean {law.mean} <= 1")
    f = law.step_transform_minus_one
    theta = 1.0
    if f(theta) > 0:
        while f(theta) >= 0:
            theta *= 0.5
            if theta < 1e-300:
                raise NonBracketable(f"{law.name}: transform never drops below 1")
        lo, hi = theta, 2 * theta
    else:
        while f(theta) <= 0:
            theta *= 2.0
            if not np.isfinite(f(theta)) or theta > 1e300:
                raise NonBracketable(f"{law.name}: transform never exceeds 1")
        lo, hi = theta / 2, theta
    xi = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(xi)) > 1e-12:
        raise NonBracketable(f"{law.name}: residual {f(xi)} at xi={xi}")
    return TiltRoot(float(xi))


def reweight(law: TabulatedLaw, theta: float) -> np.ndarray:
    """Table of ``exp(-theta (k-1)) P(D=k)`` (not renormalized)."""
    k = np.arange(law.K + 1, dtype=np.float64)
    return np.exp(-theta * (k - 1.0)) * law.table


def tilt(law: TabulatedLaw, root: TiltRoot) -> TabulatedLaw:
    """The law ``exp(-xi (k-1)) P(D=k)``; normalized because the transform is 1 at xi."""
    tab = reweight(law, root.xi)
    total = tab.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise NormalizationDrift(f"tilted mass {total!r}")
    # tails beyond the table carry weight below exp(-xi K) and are dropped
    cut = np.flatnonzero(tab > TAIL_EPS * 1e-3)
    tab = tab[: cut[-1] + 1] if cut.size else tab
    return TabulatedLaw(f"tilted({law.name})", tab / tab.sum())


def extinction_probability(root: TiltRoot) -> float:
    return root.q


# -- trees ----------------------------------------------------------------------

@dataclass(frozen=True)
class TreeOutcome:
    finite: bool
    size: int          # vertices visited (the full tree size when finite)
    reason: str = ""   # "", "steps" or "level" when censored


def sample_tree_finite(law: OffspringLaw, seed, max_steps: int = 10**6, max_level: int | None = None) -> TreeOutcome:
    """Run one tree through its walk until it hits -1 or a cap is exceeded."""
    rng = as_generator(seed, "tree")
    level, steps = 0, 0
    chunk = 64
    while True:
        if steps >= max_steps:
            return TreeOutcome(False, steps, "steps")
        draws = law.sample(rng, min(chunk, max_steps - steps)) - 1
        for d in draws:
            steps += 1
            level += int(d)
            if level < 0:
                return TreeOutcome(True, steps)
            if max_level is not None and level >= max_level:
                return TreeOutcome(False, steps, "level")
            if steps >= max_steps:
                return TreeOutcome(False, steps, "steps")
        chunk = min(chunk * 2, 1 << 16)


def extinction_frequency(law: OffspringLaw, trees: int, seed: int, max_steps: int = 10**6,
                         max_level: int = 64) -> dict:
    """Vectorized batch of independent trees.

    A tree whose walk reaches ``max_level`` is declared infinite: from level
    ``h`` a supercritical walk returns below 0 with probability
    ``exp(-xi (h+1))``. A tree still undecided after ``max_steps`` steps is
    censored and also counted as infinite.
    """
    rng = as_generator(seed, "extinction")
    level = np.zeros(trees, dtype=np.int64)
    active = np.arange(trees)
    finite = np.zeros(trees, dtype=bool)
    escaped = np.zeros(trees, dtype=bool)
    steps = 0
    while active.size and steps < max_steps:
        level[active] += law.sample(rng, active.size) - 1
        steps += 1
        died = level[active] < 0
        finite[active[died]] = True
        esc = level[active] >= max_level
        escaped[active[esc]] = True
        active = active[~(died | esc)]
    censored = active.size
    freq = finite.mean()
    return {
        "trees": trees,
        "finite_frequency": float(freq),
        "stderr": float(np.sqrt(max(freq * (1 - freq), 1e-300) / trees)),
        "escaped": int(escaped.sum()),
        "censored": int(censored),
        "censoring_rate": censored / trees,
        "max_steps": max_steps,
        "max_level": max_level,
    }
