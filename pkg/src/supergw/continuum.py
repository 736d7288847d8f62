"""Closed-form continuum references for spectrally positive stable processes.

Convention throughout: ``E[exp(-theta X_t)] = exp(t phi(theta))``. For the
drifted stable process ``X_t = L_t + lam t`` whose Lévy density is
``(c/mu) x^{-(alpha+1)}``, ``phi(theta) = (C_alpha/mu) theta^alpha - lam theta``
with ``C_alpha = c Gamma(2-alpha) / (alpha (alpha-1))``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.stats import levy_stable

from .rng import as_generator


class DomainError(ValueError):
    pass


class NotSupercritical(ValueError):
    pass


class QuadratureFailure(RuntimeError):
    def __init__(self, msg, achieved):
        super().__init__(f"{msg} (achieved error {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class StableRef:
    alpha: float
    tail_c: float
    mu: float
    lambda_drift: float = 0.0

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError("alpha must lie in (1, 2)")
        if self.tail_c <= 0 or self.mu <= 0:
            raise DomainError("tail constant and mean must be positive")

    @property
    def c_alpha(self) -> float:
        a = self.alpha
        return self.tail_c * special.gamma(2.0 - a) / (a * (a - 1.0))

    @property
    def kappa(self) -> float:
        """``C_alpha / mu``, the coefficient of ``theta^alpha``."""
        return self.c_alpha / self.mu

    @property
    def drift_vector(self) -> tuple[float, float]:
        # no Brownian part in the stable case, so the subordinator has no drift
        return (0.0, 0.0)

    @classmethod
    def from_ratio(cls, alpha, c_alpha_over_mu, lambda_drift=0.0, mu=1.0):
        """Build from ``C_alpha / mu`` directly."""
        a = alpha
        c = c_alpha_over_mu * mu * a * (a - 1.0) / special.gamma(2.0 - a)
        return cls(alpha, c, mu, lambda_drift)

    def with_drift(self, lambda_drift) -> "StableRef":
        return StableRef(self.alpha, self.tail_c, self.mu, lambda_drift)


def laplace_exponent(ref: StableRef, theta):
    th = np.asarray(theta, dtype=np.float64)
    if np.any(th < 0):
        raise DomainError("laplace_exponent needs theta >= 0")
    out = ref.kappa * th ** ref.alpha - ref.lambda_drift * th
    return out if out.ndim else float(out)


def continuum_xi(ref: StableRef) -> float:
    """Positive root of the exponent: ``(lam mu / C_alpha)^{1/(alpha-1)}``."""
    if ref.lambda_drift <= 0:
        raise NotSupercritical("continuum_xi needs lambda_drift > 0")
    return float((ref.lambda_drift / ref.kappa) ** (1.0 / (ref.alpha - 1.0)))


def tilted_exponent(ref: StableRef, theta):
    return laplace_exponent(ref, np.asarray(theta, dtype=np.float64) + continuum_xi(ref))


def dq_levy_density(ref: StableRef, x, y):
    """Density of the spine subordinator's Lévy measure at ``(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("dq_levy_density needs x, y > 0")
    xi = continuum_xi(ref)
    out = np.where(x < y, np.exp(-xi * x) * (ref.tail_c / ref.mu) * y ** -(ref.alpha + 1.0), 0.0)
    return out if out.ndim else float(out)


# -- the depleted walk transform ---------------------------------------------------

def _g_over_x2(x, theta):
    """``(exp(-theta x) - 1 + theta x) / x^2``, stable near 0."""
    x = np.asarray(x, dtype=np.float64)
    y = theta * x
    small = np.abs(y) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (np.expm1(-y) + y) / np.where(x == 0, 1.0, x) ** 2
    ser = theta ** 2 * (0.5 - y / 6.0 + y ** 2 / 24.0 - y ** 3 / 120.0)
    return np.where(small, ser, big)


def _inner(ref: StableRef, theta, s, tol):
    a, cm = ref.alpha, ref.tail_c / ref.mu
    decay = s / ref.mu
    # [0, 1]: x^{1-alpha} handled as an algebraic weight, the rest is smooth
    f0 = lambda x: _g_over_x2(x, theta) * np.exp(-x * decay)
    v0, e0 = integrate.quad(f0, 0.0, 1.0, weight="alg", wvar=(1.0 - a, 0.0),
                            epsabs=tol, epsrel=1e-12, limit=200)
    f1 = lambda x: x ** -(a + 1.0) * np.exp(-x * decay) * (np.expm1(-theta * x) + theta * x)
    v1, e1 = integrate.quad(f1, 1.0, np.inf, epsabs=tol, epsrel=1e-12, limit=400)
    return cm * (v0 + v1), cm * (e0 + e1)


def k_tilde_log_laplace(ref: StableRef, theta, t, tol=1e-8, inner_tol=1e-10):
    """``log E[exp(-theta K~(t))]`` by adaptive quadrature, with error estimate."""
    if theta < 0 or t < 0:
        raise DomainError("k_tilde_laplace needs theta, t >= 0")
    if theta == 0 or t == 0:
        return 0.0, 0.0
    errs = []

    def outer(s):
        v, e = _inner(ref, theta, s, inner_tol)
        errs.append(e)
        return v

    val, err = integrate.quad(outer, 0.0, t, epsabs=tol, epsrel=1e-12, limit=200)
    err_total = err + t * max(errs)
    if err_total > tol:
        raise QuadratureFailure("k_tilde_laplace quadrature", err_total)
    lin = -theta * ref.lambda_drift * t + theta * ref.c_alpha * (t / ref.mu) ** ref.alpha
    return lin + val, err_total


def k_tilde_laplace(ref: StableRef, theta, t, tol=1e-8):
    """``E[exp(-theta K~(t))]`` where ``K~`` is the walk in size-biased order."""
    v, e = k_tilde_log_laplace(ref, theta, t, tol)
    return float(np.exp(v))


def k_tilde_log_laplace_closed(ref: StableRef, theta, t):
    """Closed form of the same quantity. The inner integral equals
    ``U(theta+u) - U(u) - theta U'(u)`` with ``U(u) = (C_alpha/mu) u^alpha``,
    ``u = s/mu``, and integrates in ``s`` in closed form."""
    a, C, mu = ref.alpha, ref.c_alpha, ref.mu
    u = t / mu
    return (-theta * ref.lambda_drift * t
            + C / (a + 1.0) * ((theta + u) ** (a + 1.0) - theta ** (a + 1.0) - u ** (a + 1.0)))


def _grid_integral(ref: StableRef, theta, t, N):
    # midpoint rule after s = t v^2, x = u^2 on (0,1) and x = 1/w^2 on (1,inf);
    # the substitutions remove the endpoint singularities at alpha = 1.5
    a, cm, mu = ref.alpha, ref.tail_c / ref.mu, ref.mu
    v = (np.arange(N) + 0.5) / N
    s = t * v ** 2
    ds = 2.0 * t * v / N
    u = (np.arange(2 * N) + 0.5) / (2 * N)
    x_lo, jac_lo = u ** 2, 2.0 * u / (2 * N)
    x_hi, jac_hi = 1.0 / u ** 2, 2.0 / u ** 3 / (2 * N)
    total = 0.0
    for x, jac in ((x_lo, jac_lo), (x_hi, jac_hi)):
        base = cm * x ** -(a + 1.0) * (np.expm1(-theta * x) + theta * x) * jac
        total += float(ds @ (np.exp(-np.outer(s, x) / mu) @ base))
    return total


def k_tilde_log_laplace_grid(ref: StableRef, theta, t, N=400):
    """Independent check of :func:`k_tilde_log_laplace`: dense midpoint grids at
    ``N`` and ``2N`` points combined by Richardson extrapolation."""
    if theta == 0 or t == 0:
        return 0.0
    coarse = _grid_integral(ref, theta, t, N)
    fine = _grid_integral(ref, theta, t, 2 * N)
    lin = -theta * ref.lambda_drift * t + theta * ref.c_alpha * (t / ref.mu) ** ref.alpha
    return lin + (4.0 * fine - coarse) / 3.0


# -- sampling ---------------------------------------------------------------------

def stable_scale(ref: StableRef, t: float) -> float:
    """Scale of the totally skewed stable law (S1 parameterization) with
    ``E[exp(-theta L_t)] = exp(t kappa theta^alpha)``."""
    a = ref.alpha
    return float((t * ref.kappa * abs(np.cos(np.pi * a / 2.0))) ** (1.0 / a))


def sample_stable_marginal(ref: StableRef, t: float, count: int, seed) -> np.ndarray:
    """Samples of ``L_t + lam t``."""
    if t <= 0 or count < 1:
        raise DomainError("need t > 0 and count >= 1")
    rng = as_generator(seed, "stable")
    x = levy_stable.rvs(ref.alpha, 1.0, loc=0.0, scale=stable_scale(ref, t), size=count, random_state=rng)
    return x + ref.lambda_drift * t


def reference_csv(ref: StableRef, thetas, ts) -> str:
    buf = io.StringIO()
    buf.write("theta,t,stable_laplace,k_tilde_laplace\n")
    for t in ts:
        for th in thetas:
            st = float(np.exp(t * laplace_exponent(ref, th)))
            kt = float(np.exp(k_tilde_log_laplace_closed(ref, th, t)))
            buf.write(f"{th:.6g},{t:.6g},{st:.12g},{kt:.12g}\n")
    return buf.getvalue()
