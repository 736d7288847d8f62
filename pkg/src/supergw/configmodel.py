"""Percolated power-law configuration model in the critical window.

Degrees are ``B = Binomial(D, p)`` with ``p`` chosen so that the size-biased
mean of ``B`` is ``2 + lam n^{-(alpha-1)/(alpha+1)}``. The multigraph is
explored depth first with a stack of half-edges; every pairing is uniform
among the unpaired half-edges, so the first-visit order of vertices is the
size-biased order of the degrees.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit
from scipy import special

from . import walk
from .continuum import StableRef
from .laws import (PercolatedLaw, PowerLaw, SeriesTruncation, TabulatedLaw,
                   ThinnedSizeBiasedChild, window_probability)
from .rng import as_generator


class PrefixTooShort(ValueError):
    pass


def ifloor(x: float) -> int:
    """``floor`` that forgives float error just below an integer (10**5**0.6 -> 1000)."""
    return int(math.floor(x + 1e-9 * max(1.0, abs(x))))


@dataclass(frozen=True)
class DegreeModel:
    base: PowerLaw
    lambda_window: float
    n: int

    def __post_init__(self):
        if self.base.tail_spec is None:
            raise ValueError("the base law needs a power-law tail")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.rho > 2.0 * self.mu:
            raise ValueError(f"base law has rho={self.rho:.6g} <= 2 mu={2 * self.mu:.6g}")
        _ = self.p  # validates the window

    @property
    def alpha(self) -> float:
        return self.base.tail_spec[1]

    @property
    def tail_c(self) -> float:
        return self.base.tail_spec[0]

    @property
    def mu(self) -> float:
        return self.base.mean

    @property
    def rho(self) -> float:
        return self.base.second_moment

    @property
    def epsilon(self) -> float:
        return (self.alpha - 1.0) / (self.alpha + 1.0)

    @cached_property
    def p(self) -> float:
        return window_probability(self.mu, self.rho, self.alpha, self.lambda_window, self.n)

    @cached_property
    def p_critical(self) -> float:
        return 1.0 / (self.rho / self.mu - 1.0)

    @cached_property
    def law(self) -> PercolatedLaw:
        return PercolatedLaw(self.base, self.p)

    @cached_property
    def child(self) -> ThinnedSizeBiasedChild:
        return self.law.size_biased_child()

    # finite-n and limiting constants of the percolated degree
    @property
    def mu_n(self) -> float:
        return self.p * self.mu

    @property
    def c_n(self) -> float:
        return self.tail_c * self.p ** (self.alpha + 1.0)

    @property
    def limit_mu(self) -> float:
        return self.p_critical * self.mu

    @property
    def limit_c(self) -> float:
        return self.tail_c * self.p_critical ** (self.alpha + 1.0)

    def c_alpha_n(self) -> float:
        a = self.alpha
        return self.c_n * special.gamma(2.0 - a) / (a * (a - 1.0))

    def stable_ref(self, finite_n: bool = False) -> StableRef:
        """Limit reference; ``finite_n`` uses ``(c_n, mu_n)`` in place of the limits."""
        if finite_n:
            return StableRef(self.alpha, self.c_n, self.mu_n, self.lambda_window)
        return StableRef(self.alpha, self.limit_c, self.limit_mu, self.lambda_window)

    def at(self, n=None, lambda_window=None) -> "DegreeModel":
        return DegreeModel(self.base, self.lambda_window if lambda_window is None else lambda_window,
                           self.n if n is None else n)

    @property
    def time_scale(self) -> float:
        return self.n ** (self.alpha / (self.alpha + 1.0))

    @property
    def space_scale(self) -> float:
        return self.n ** (-1.0 / (self.alpha + 1.0))

    @property
    def height_scale(self) -> float:
        return self.n ** (-self.epsilon)


def percolation_probability(model: DegreeModel) -> float:
    return model.p


def sample_degrees(model: DegreeModel, seed) -> np.ndarray:
    """``n`` i.i.d. percolated degrees with an even sum (last one bumped if odd)."""
    rng = as_generator(seed, "degrees")
    deg = np.asarray(model.law.sample(rng, model.n), dtype=np.int64)
    if deg.sum() % 2:
        deg[-1] += 1
    return deg


def size_biased_order(degrees, seed) -> np.ndarray:
    """Permutation with ``P = prod_i d_{s(i)} / sum_{j>=i} d_{s(j)}``.

    Sorting exponential clocks ``E_v / d_v`` gives exactly this law; vertices
    of degree 0 get infinite clocks and a uniform order among themselves.
    """
    rng = as_generator(seed, "size_biased_order")
    d = np.asarray(degrees, dtype=np.float64)
    e = rng.standard_exponential(d.size)
    tie = rng.random(d.size)
    with np.errstate(divide="ignore"):
        keys = np.where(d > 0, e / np.where(d > 0, d, 1.0), np.inf)
    return np.lexsort((tie, keys))


# -- exploration ---------------------------------------------------------------

@njit(cache=True)
def _explore(deg, u):
    n = deg.shape[0]
    off = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        off[v + 1] = off[v] + deg[v]
    M = off[n]
    owner = np.empty(M, dtype=np.int64)
    for v in range(n):
        for h in range(off[v], off[v + 1]):
            owner[h] = v
    pool = np.arange(M)
    pos = np.arange(M)
    size = M
    paired = np.zeros(M, dtype=np.bool_)
    visited = np.zeros(n, dtype=np.bool_)
    vdepth = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    depth = np.empty(n, dtype=np.int64)
    cstart = np.empty(n, dtype=np.int64)
    csurplus = np.empty(n, dtype=np.int64)
    stack = np.empty(M, dtype=np.int64)
    top = 0
    nv = 0
    nc = 0
    ui = 0
    npaired = 0
    while size > 0:
        # a uniform unpaired half-edge belongs to an unexplored vertex chosen
        # proportionally to its degree (the stack is empty here)
        j = min(int(u[ui] * size), size - 1)
        ui += 1
        v = owner[pool[j]]
        visited[v] = True
        vdepth[v] = 0
        order[nv] = v
        depth[nv] = 0
        cstart[nc] = nv
        nv += 1
        surplus = 0
        for h in range(off[v + 1] - 1, off[v] - 1, -1):
            stack[top] = h
            top += 1
        while top > 0:
            top -= 1
            h = stack[top]
            if paired[h]:
                continue
            # take h out of the pool
            i = pos[h]
            last = pool[size - 1]
            pool[i] = last
            pos[last] = i
            size -= 1
            paired[h] = True
            # uniform partner among the remaining unpaired half-edges
            j = min(int(u[ui] * size), size - 1)
            ui += 1
            h2 = pool[j]
            last = pool[size - 1]
            pool[j] = last
            pos[last] = j
            size -= 1
            paired[h2] = True
            npaired += 2
            w = owner[h2]
            if visited[w]:
                # h2 was still on the stack: a surplus edge, both half-edges gone
                surplus += 1
            else:
                visited[w] = True
                vdepth[w] = vdepth[owner[h]] + 1
                order[nv] = w
                depth[nv] = vdepth[w]
                nv += 1
                for h3 in range(off[w + 1] - 1, off[w] - 1, -1):
                    if h3 != h2:
                        stack[top] = h3
                        top += 1
        csurplus[nc] = surplus
        nc += 1
    return order[:nv], depth[:nv], cstart[:nc], csurplus[:nc], npaired, top


@dataclass(frozen=True)
class ExplorationRecord:
    """Transcript of one depth-first exploration.

    ``ordered_vertices`` / ``ordered_degrees`` / ``depths`` list all ``n``
    vertices in discovery order, degree-0 vertices last. ``path`` is the walk
    with steps ``degree - 2`` over the positive-degree vertices only.
    ``component_spans[i] = (start, end)`` indexes the ordered lists.
    """
    ordered_vertices: np.ndarray
    ordered_degrees: np.ndarray
    depths: np.ndarray
    path: np.ndarray
    component_spans: np.ndarray
    surplus_counts: np.ndarray
    half_edges_paired: int
    positive_vertices: int

    @property
    def n(self) -> int:
        return int(self.ordered_vertices.size)

    def component_heights(self, i: int) -> np.ndarray:
        a, b = self.component_spans[i]
        return self.depths[a:b]

    def components_jsonl(self) -> str:
        return "".join(json.dumps({"size": s, "surplus": x, "max_height": h}) + "\n"
                       for s, x, h in component_summaries(self))

    def path_csv(self) -> str:
        return walk.path_to_csv(self.path, self.depths[: self.path.size - 1])


def explore(degrees, seed) -> ExplorationRecord:
    deg = np.ascontiguousarray(degrees, dtype=np.int64)
    if deg.size and deg.min() < 0:
        raise ValueError("degrees must be nonnegative")
    total = int(deg.sum())
    if total % 2:
        raise ValueError("degree sum must be even")
    rng = as_generator(seed, "explore")
    pos = int((deg > 0).sum())
    u = rng.random(total // 2 + pos + 1)
    order, depth, cstart, csurplus, npaired, top = _explore(deg, u)
    if top != 0 or npaired != total:
        raise AssertionError("exploration ended with unpaired half-edges")
    zeros = np.flatnonzero(deg == 0)
    zeros = zeros[rng.permutation(zeros.size)]
    order_all = np.concatenate((order, zeros))
    depths = np.concatenate((depth, np.zeros(zeros.size, dtype=np.int64)))
    starts = np.concatenate((cstart, np.arange(order.size, order_all.size)))
    ends = np.append(starts[1:], order_all.size)
    spans = np.stack((starts, ends), axis=1) if starts.size else np.zeros((0, 2), dtype=np.int64)
    surplus = np.concatenate((csurplus, np.zeros(zeros.size, dtype=np.int64)))
    odeg = deg[order_all]
    return ExplorationRecord(order_all, odeg, depths, walk.path_from_steps(odeg[:pos] - 2),
                             spans, surplus, npaired, pos)


def component_summaries(record: ExplorationRecord) -> list[tuple[int, int, int]]:
    """``(size, surplus, max_height)`` sorted by decreasing size, ties by exploration order."""
    spans = record.component_spans
    sizes = spans[:, 1] - spans[:, 0]
    hmax = np.array([int(record.depths[a:b].max()) for a, b in spans], dtype=np.int64)
    idx = np.argsort(-sizes, kind="stable")
    return [(int(sizes[i]), int(record.surplus_counts[i]), int(hmax[i])) for i in idx]


# -- measure change -------------------------------------------------------------

def _prefix_walk(prefix_degrees) -> np.ndarray:
    k = np.asarray(prefix_degrees, dtype=np.int64)
    return walk.path_from_steps(k - 2)


def lower_bound_log(sum_term, c_alpha_n, mu, lam, alpha, t) -> float:
    """Log of the asymptotic lower bound given its ingredients."""
    return (sum_term - c_alpha_n * t ** (alpha + 1.0) / ((alpha + 1.0) * mu ** (alpha + 1.0))
            + lam * t * t / (2.0 * mu))


def measure_change_lower_bound(path_prefix, model: DegreeModel, t: float) -> float:
    """``exp(sum_{i<=m}(S(i)-S(m))/(n mu_n) - C^(n) t^{a+1}/((a+1) mu^{a+1}) + lam t^2/(2 mu))``
    with ``m = floor(t n^{a/(a+1)})``; ``mu_n, C^(n)`` at ``n`` and ``mu`` the limit mean."""
    m = ifloor(t * model.time_scale)
    s = np.asarray(path_prefix, dtype=np.float64)
    if s.size < m + 1:
        raise PrefixTooShort(f"need S(0..{m}), got {s.size} values")
    sum_term = float(np.sum(s[: m + 1] - s[m])) / (model.n * model.mu_n)
    return float(np.exp(lower_bound_log(sum_term, model.c_alpha_n(), model.limit_mu,
                                        model.lambda_window, model.alpha, t)))


def measure_change_lower_bound_exact(prefix_degrees, model: DegreeModel) -> float:
    """Non-asymptotic bound ``phi_m^n >= prod_{i<m}(1-i/n) exp(m - sum_i a_i/(n mu_n))
    L_B(m/(n mu_n))^{n-m}`` obtained from ``log x <= x - 1`` termwise."""
    k = np.asarray(prefix_degrees, dtype=np.int64)
    m, n = k.size, model.n
    if m == 0:
        return 1.0
    nm = n * model.mu_n
    a_sum = float(np.sum(np.arange(1, m + 1) * k))  # sum_i sum_{j>=i} k_j
    log_fall = float(np.sum(np.log1p(-np.arange(1, m) / n)))
    log_lap = (n - m) * float(np.log(model.law.laplace(m / nm)))
    return float(np.exp(log_fall + m - a_sum / nm + log_lap))


def _sum_iid_sampler(table: np.ndarray, count: int, reps: int, rng, tail_draw=None) -> np.ndarray:
    """``reps`` draws of the sum of ``count`` i.i.d. variables with pmf ``table``
    (mass beyond the table drawn by ``tail_draw(u)``): multinomial over the bulk
    of the table plus individual draws for the rare large values."""
    cdf = np.cumsum(table)
    total = 1.0 if tail_draw is not None else cdf[-1]
    k1 = int(np.searchsorted(cdf, total - 1.0 / max(count, 1) * 1e-2))
    k1 = min(k1, table.size - 1)
    bulk = table[: k1 + 1] / total
    rest = max(1.0 - bulk.sum(), 0.0)
    counts = rng.multinomial(count, np.append(bulk, rest), size=reps)
    sums = counts[:, :-1] @ np.arange(k1 + 1, dtype=np.int64)
    t_counts = counts[:, -1]
    nt = int(t_counts.sum())
    if nt:
        lo = cdf[k1] / total
        u = lo + rng.random(nt) * (1.0 - lo)
        vals = np.searchsorted(cdf / total, u, side="right").astype(np.int64)
        beyond = vals >= table.size
        if beyond.any():
            vals[beyond] = [tail_draw(x) for x in u[beyond]] if tail_draw else table.size - 1
        sums = sums + np.bincount(np.repeat(np.arange(reps), t_counts), weights=vals,
                                  minlength=reps).astype(np.int64)
    return sums


def sample_xi_sum(model: DegreeModel, count: int, reps: int, rng, tilt_s: float = 0.0) -> np.ndarray:
    """Draws of ``Xi = sum of count percolated degrees``; with ``tilt_s > 0`` the
    draws come from the law reweighted by ``exp(-tilt_s Xi)``."""
    base, p = model.base, model.p
    if tilt_s == 0.0:
        dsum = _sum_iid_sampler(base.table, count, reps, rng, tail_draw=base._invert_tail)
        return rng.binomial(dsum, p)
    y = 1.0 - p * (-math.expm1(-tilt_s))
    kmax = min(base.K, int(math.ceil(-40.0 / math.log(y))) + base.kmin)
    d = np.arange(kmax + 1, dtype=np.float64)
    w = base.table[: kmax + 1] * np.exp(d * math.log(y))
    w /= w.sum()
    dsum = _sum_iid_sampler(w, count, reps, rng)
    return rng.binomial(dsum, p * math.exp(-tilt_s) / y)


def phi_exact_mc(prefix_degrees, model: DegreeModel, inner_reps: int, seed,
                 importance: bool = True) -> tuple[float, float]:
    """Monte Carlo value of
    ``phi_m^n(k) = n! mu_n^m / (n-m)! * E[prod_i 1/(sum_{j>=i} k_j + Xi_{n-m})]``.

    With ``importance`` the sum ``Xi`` is drawn under an exponential tilt at the
    slope of the log-integrand, which keeps the estimator unbiased and makes
    its weights nearly constant.
    """
    k = np.asarray(prefix_degrees, dtype=np.int64)
    m, n = k.size, model.n
    if m == 0:
        return 1.0, 0.0
    if m > n:
        raise ValueError("prefix longer than n")
    rng = as_generator(seed, "phi_inner")
    a = np.cumsum(k[::-1])[::-1].astype(np.float64)
    count = n - m
    mean_xi = count * model.mu_n
    s = float(np.sum(1.0 / (a + mean_xi))) if importance else 0.0
    xi = sample_xi_sum(model, count, inner_reps, rng, tilt_s=s).astype(np.float64)
    logw = -np.log(a[None, :] + xi[:, None]).sum(axis=1) + s * xi
    log_norm = count * math.log(model.law.laplace(s)) if s > 0 else 0.0
    log_pref = special.gammaln(n + 1) - special.gammaln(n - m + 1) + m * math.log(model.mu_n)
    top = logw.max()
    w = np.exp(logw - top)
    mean = w.mean()
    scale = math.exp(log_pref + log_norm + top)
    est = scale * mean
    se = scale * w.std(ddof=1) / math.sqrt(w.size) if w.size > 1 else float("nan")
    return float(est), float(se)


# -- (CM4) heuristic ---------------------------------------------------------------

def cm4_pgf_iteration(model: DegreeModel, delta: float, n_grid) -> list[dict]:
    """Iterate the size-biased child pgf from 0, ``floor(delta n^eps)`` times,
    and raise the result to ``floor(n^{1/(alpha+1)})``. A finite-n heuristic."""
    rows = []
    for n in n_grid:
        mod = model.at(n=int(n))
        child = mod.child
        iters = ifloor(delta * n ** mod.epsilon)
        power = ifloor(n ** (1.0 / (mod.alpha + 1.0)))
        x = 0.0
        for _ in range(iters):
            nx = float(child.pgf(x))
            if not (0.0 <= nx <= 1.0 + 1e-14) or nx < x - 1e-14:
                raise SeriesTruncation(f"pgf iteration left [0,1] or decreased at n={n}")
            x = min(nx, 1.0)
        rows.append({"n": int(n), "iterations": iters, "power": power, "iterate": x,
                     "value": x ** power if iters else 0.0})
    return rows


def exploration_summary_csv(record: ExplorationRecord) -> str:
    buf = io.StringIO()
    buf.write("size,surplus,max_height\n")
    for row in component_summaries(record):
        buf.write("%d,%d,%d\n" % row)
    return buf.getvalue()
