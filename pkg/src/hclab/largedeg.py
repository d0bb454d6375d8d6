"""Scalar theory of the large-degree limit.

When both edge intensities grow with the SNR held fixed, the conditional
field laws become Gaussian with a single variance parameter mu:

    xi0 ~ N(-log((1-kappa)/kappa) - mu/2, mu),
    xi1 ~ N(-log((1-kappa)/kappa) + mu/2, mu),

and mu solves the scalar fixed-point equation mu = lambda F(mu; kappa)
with F a Gaussian expectation of a logistic-shaped integrand.  This
module evaluates F and the free energy Psi(mu), iterates the fixed point,
and extracts the three thresholds (spinodal, static, dynamic) plus the
critical endpoint of the phase-coexistence region.

Quadrature: the integrand has a logistic knee of width 1/sqrt(mu), so a
fixed Gauss-Hermite rule loses accuracy once mu is large.  Expectations
use composite Gauss-Legendre panels over z in [-12, 12], refined around
the knee; accuracy is validated by node doubling in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ndtr

from .errors import GuardError

__all__ = [
    "F",
    "F_dmu",
    "lambda_of_mu",
    "mu_iterate",
    "mu_sequence",
    "fixed_points",
    "MuFixedPoints",
    "PhaseBoundaries",
    "psi_mu",
    "phase_boundaries",
    "critical_point",
    "psucc_largedeg",
    "mubar_recursion",
    "MubarResult",
    "gaussian_limit_check",
    "GaussianCheckRow",
]

_ZMAX = 12.0
_BASE_STEP = 0.5
_REFINE_HALFWIDTH = 45.0  # in units of the knee width 1/sqrt(mu)


@lru_cache(maxsize=None)
def _gl_rule(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return x, w


def _gauss_nodes(mu: float, knees: tuple[float, ...], nodes: int):
    """Nodes/weights for E_{Z~N(0,1)}, refined around each knee."""
    edges = [np.arange(-_ZMAX, _ZMAX + 1e-12, _BASE_STEP)]
    if mu > 4.0:
        width = 1.0 / math.sqrt(mu)
        step = max(_BASE_STEP / 8.0, 2.0 * width)
        for knee in knees:
            lo = max(-_ZMAX, knee - _REFINE_HALFWIDTH * width)
            hi = min(_ZMAX, knee + _REFINE_HALFWIDTH * width)
            if hi > lo:
                edges.append(np.arange(lo, hi + 1e-12, step))
    grid = np.unique(np.concatenate(edges))
    grid = grid[np.concatenate(([True], np.diff(grid) > 1e-9))]
    x, w = _gl_rule(nodes)
    mid = 0.5 * (grid[1:] + grid[:-1])[:, None]
    half = 0.5 * (grid[1:] - grid[:-1])[:, None]
    z = (mid + half * x[None, :]).ravel()
    wz = (half * w[None, :]).ravel() * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return z, wz


def F(mu: float, kappa: float, nodes: int = 12) -> float:
    """Gaussian expectation E[(1-kappa) / (kappa + (1-kappa) e^{-mu/2 + sqrt(mu) Z})].

    Equals 1 - kappa at mu = 0, e^mu in the kappa -> 0 limit, and is
    bounded by (1-kappa)/kappa; increasing in mu, decreasing in kappa.
    """
    if mu < 0:
        raise ValueError("invalid variance: mu must be nonnegative")
    if not 0.0 <= kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in [0, 1)")
    if mu == 0.0:
        return 1.0 - kappa
    if kappa == 0.0:
        try:
            return math.exp(mu)
        except OverflowError:
            return math.inf
    s = math.sqrt(mu)
    knee = (mu / 2.0 + math.log(kappa / (1.0 - kappa))) / s
    z, wz = _gauss_nodes(mu, (knee,), nodes)
    w = -mu / 2.0 + s * z
    logg = math.log1p(-kappa) - np.logaddexp(math.log(kappa), math.log1p(-kappa) + w)
    return float(np.dot(wz, np.exp(logg)))


def F_dmu(mu: float, kappa: float, nodes: int = 12) -> float:
    """Analytic d/dmu of F, by differentiating under the integral."""
    if mu <= 0:
        raise ValueError("F_dmu requires mu > 0")
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    s = math.sqrt(mu)
    knee = (mu / 2.0 + math.log(kappa / (1.0 - kappa))) / s
    z, wz = _gauss_nodes(mu, (knee,), nodes)
    w = -mu / 2.0 + s * z
    denom = np.logaddexp(math.log(kappa), math.log1p(-kappa) + w)
    g = np.exp(math.log1p(-kappa) - denom)
    sig = np.exp(math.log1p(-kappa) + w - denom)  # (1-k)e^w / (k + (1-k)e^w)
    return float(np.dot(wz, g * sig * (0.5 - z / (2.0 * s))))


def lambda_of_mu(mu: float, kappa: float, nodes: int = 12) -> float:
    """The SNR at which mu is a fixed point: lambda = mu / F(mu; kappa)."""
    return mu / F(mu, kappa, nodes)


@dataclass(frozen=True)
class IterateResult:
    value: float
    converged: bool
    steps: int


def mu_iterate(
    lam: float,
    kappa: float,
    mu0: float,
    T: int = 200_000,
    tol: float = 1e-12,
    nodes: int = 12,
) -> IterateResult:
    """Iterate mu <- lambda F(mu; kappa) from mu0 until the step is < tol.

    The map is increasing and bounded by lambda (1-kappa)/kappa, so the
    iteration is monotone from either end; non-convergence within T steps
    is flagged, with the last value returned anyway.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    mu = float(mu0)
    for step in range(1, T + 1):
        nxt = lam * F(mu, kappa, nodes)
        done = abs(nxt - mu) < tol * max(1.0, abs(nxt))
        mu = nxt
        if done:
            return IterateResult(mu, True, step)
    return IterateResult(mu, False, T)


def mu_sequence(lam: float, kappa: float, t: int, nodes: int = 12) -> np.ndarray:
    """The trajectory mu^(0)=0, mu^(s+1) = lambda F(mu^(s)); length t+1."""
    out = np.zeros(t + 1)
    for s in range(t):
        out[s + 1] = lam * F(out[s], kappa, nodes)
    return out


@dataclass(frozen=True)
class MuFixedPoints:
    """Free- and plus-branch fixed points of mu = lambda F(mu; kappa)."""

    kappa: float
    lam: float
    mu_fr: float
    mu_pl: float
    coincide: bool


def fixed_points(
    lam: float, kappa: float, tol: float = 1e-12, T: int = 200_000, nodes: int = 12
) -> MuFixedPoints:
    """Both stable branches: free starts at 0, plus at the upper bound."""
    fr = mu_iterate(lam, kappa, 0.0, T=T, tol=tol, nodes=nodes)
    cap = lam * (1.0 - kappa) / kappa
    pl = mu_iterate(lam, kappa, cap, T=T, tol=tol, nodes=nodes)
    coincide = abs(pl.value - fr.value) <= 1e-7 * (1.0 + abs(pl.value))
    return MuFixedPoints(kappa=kappa, lam=lam, mu_fr=fr.value, mu_pl=pl.value, coincide=coincide)


def psi_mu(mu: float, lam: float, kappa: float, nodes: int = 12) -> float:
    """Large-degree free energy as a function of the order parameter.

    Psi(mu) = lambda(1-kappa)/4 + kappa^2 mu^2 / (4 lambda (1-kappa))
              - E log(1 - kappa + kappa exp(sqrt(mu) Z - mu/2 + mu X)),
    X ~ Bernoulli(kappa), Z ~ N(0,1).  Stationary points are the fixed
    points of mu = lambda F(mu; kappa).
    """
    if mu < 0:
        raise ValueError("invalid variance: mu must be nonnegative")
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    if lam == 0.0:
        if mu > 0.0:
            raise ValueError("undefined ratio: lambda = 0 with mu > 0")
        return 0.0
    if mu == 0.0:
        return lam * (1.0 - kappa) / 4.0
    s = math.sqrt(mu)
    lk = math.log((1.0 - kappa) / kappa)

    def elog(x_val: int) -> float:
        knee = (mu / 2.0 - mu * x_val + lk) / s
        z, wz = _gauss_nodes(mu, (knee,), nodes)
        vals = np.logaddexp(
            math.log1p(-kappa), math.log(kappa) + s * z - mu / 2.0 + mu * x_val
        )
        return float(np.dot(wz, vals))

    quad = kappa**2 * mu**2 / (4.0 * lam * (1.0 - kappa))
    return (
        lam * (1.0 - kappa) / 4.0
        + quad
        - ((1.0 - kappa) * elog(0) + kappa * elog(1))
    )


@dataclass(frozen=True)
class PhaseBoundaries:
    """Per-kappa thresholds; None above the critical point."""

    kappa: float
    lambda_sp: float | None
    lambda_s: float | None
    lambda_d: float | None


def _lambda_extrema(kappa: float, nodes: int = 12):
    """Interior local max/min of Lambda(mu) = mu / F(mu; kappa).

    Fixed points of mu = lambda F are the solutions of Lambda(mu) = lambda;
    when Lambda is S-shaped its local max is the dynamic threshold (the
    low branch annihilates there) and its local min is the spinodal (the
    high branch appears there).  Returns (lambda_sp, lambda_d, mu_at_min,
    mu_at_max) or None when Lambda is monotone.
    """
    hi = 3.0 * (1.0 - kappa) / kappa
    grid = np.geomspace(1e-3, hi, 600)
    lam_vals = np.array([lambda_of_mu(m, kappa, nodes) for m in grid])
    d = np.diff(lam_vals)
    sign = np.sign(d)
    idx_max = None
    idx_min = None
    for i in range(1, len(sign)):
        if idx_max is None and sign[i - 1] > 0 >= sign[i]:
            idx_max = i
        elif idx_max is not None and sign[i - 1] < 0 <= sign[i]:
            idx_min = i
            break
    if idx_max is None or idx_min is None:
        return None

    def refine(idx, direction):
        lo, hi_ = grid[max(idx - 1, 0)], grid[min(idx + 1, len(grid) - 1)]
        res = minimize_scalar(
            lambda m: direction * lambda_of_mu(m, kappa, nodes),
            bounds=(lo, hi_),
            method="bounded",
            options={"xatol": 1e-10 * (1.0 + hi_)},
        )
        return float(res.x), direction * float(res.fun)

    mu_max, lam_d = refine(idx_max, -1.0)
    mu_min, lam_sp = refine(idx_min, +1.0)
    return lam_sp, lam_d, mu_min, mu_max


def phase_boundaries(
    kappa: float,
    lambda_bracket: tuple[float, float] | None = None,
    tol: float = 1e-4,
    nodes: int = 12,
) -> PhaseBoundaries:
    """The spinodal, static, and dynamic thresholds at fixed kappa.

    lambda_sp / lambda_d come from the extrema of mu / F(mu); lambda_s is
    the root of Psi(mu_fr) = Psi(mu_pl), located by bisection on the sign
    of the difference.  All three are None when the two branches never
    separate (kappa above the critical point).
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    ext = _lambda_extrema(kappa, nodes)
    if ext is None:
        return PhaseBoundaries(kappa=kappa, lambda_sp=None, lambda_s=None, lambda_d=None)
    lam_sp, lam_d, _, _ = ext
    if lambda_bracket is not None:
        lo, hi = lambda_bracket
        if not (lo <= lam_sp and lam_d <= hi):
            raise GuardError(
                f"bracket miss: boundaries ({lam_sp:.6g}, {lam_d:.6g}) "
                f"outside [{lo:.6g}, {hi:.6g}]"
            )

    def psi_diff(lam: float) -> float:
        fp = fixed_points(lam, kappa, nodes=nodes)
        return psi_mu(fp.mu_pl, lam, kappa, nodes) - psi_mu(fp.mu_fr, lam, kappa, nodes)

    eps = 1e-3 * (lam_d - lam_sp)
    lo, hi = lam_sp + eps, lam_d - eps
    dlo, dhi = psi_diff(lo), psi_diff(hi)
    if not (dlo > 0 > dhi):
        raise GuardError("bracket miss: free-energy difference does not change sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if psi_diff(mid) > 0:
            lo = mid
        else:
            hi = mid
    lam_s = 0.5 * (lo + hi)
    return PhaseBoundaries(kappa=kappa, lambda_sp=lam_sp, lambda_s=lam_s, lambda_d=lam_d)


def _min_lambda_slope(kappa: float, nodes: int = 12):
    """Minimum over mu of Lambda'(mu); negative iff two phases coexist."""
    hi = 3.0 * (1.0 - kappa) / kappa

    def slope(m: float) -> float:
        f = F(m, kappa, nodes)
        return (f - m * F_dmu(m, kappa, nodes)) / (f * f)

    grid = np.geomspace(0.5, hi, 400)
    vals = np.array([slope(m) for m in grid])
    i = int(np.argmin(vals))
    lo_i, hi_i = max(i - 2, 0), min(i + 2, len(grid) - 1)
    res = minimize_scalar(
        slope, bounds=(grid[lo_i], grid[hi_i]), method="bounded",
        options={"xatol": 1e-9 * (1.0 + grid[hi_i])},
    )
    return float(res.fun), float(res.x)


def critical_point(tol: float = 1e-4, nodes: int = 12) -> tuple[float, float]:
    """Endpoint (kappa*, lambda*) of the coexistence region.

    The branch-separation interval (lambda_sp, lambda_d) exists iff
    Lambda(mu) = mu/F is non-monotone, i.e. min Lambda' < 0; kappa* is
    found by bisection on that predicate and lambda* is Lambda at the
    flattening point.
    """
    lo, hi = 0.02, 0.08
    if _min_lambda_slope(lo, nodes)[0] >= 0 or _min_lambda_slope(hi, nodes)[0] < 0:
        raise ArithmeticError("critical-point bracket failed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _min_lambda_slope(mid, nodes)[0] < 0:
            lo = mid
        else:
            hi = mid
    kappa_star = 0.5 * (lo + hi)
    _, mu_flat = _min_lambda_slope(kappa_star, nodes)
    return kappa_star, lambda_of_mu(mu_flat, kappa_star, nodes)


def psucc_largedeg(mu: float) -> float:
    """Limiting success probability 1 - 2 Phi(-sqrt(mu)/2)."""
    if mu < 0:
        raise ValueError("invalid variance: mu must be nonnegative")
    return 1.0 - 2.0 * float(ndtr(-math.sqrt(mu) / 2.0))


@dataclass(frozen=True)
class MubarResult:
    """kappa -> 0 recursion mubar' = lambda exp(mubar) from 0."""

    values: np.ndarray
    diverged_at: int | None


def mubar_recursion(lam: float, T: int, cutoff: float = 1e3) -> MubarResult:
    """Iterate the kappa -> 0 scalar recursion for T steps.

    Converges to -W(-lambda) style fixed point for lambda < 1/e; for
    lambda > 1/e it blows past the cutoff and the first offending step
    index is reported.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    vals = [0.0]
    for step in range(1, T + 1):
        nxt = lam * math.exp(vals[-1])
        vals.append(nxt)
        if nxt > cutoff:
            return MubarResult(values=np.array(vals), diverged_at=step)
    return MubarResult(values=np.array(vals), diverged_at=None)


@dataclass(frozen=True)
class GaussianCheckRow:
    """Empirical-vs-limit comparison at one iteration."""

    t: int
    mu: float
    mean0: float
    mean1: float
    var0: float
    var1: float
    rel_mean0: float
    rel_mean1: float
    rel_var0: float
    rel_var1: float


def gaussian_limit_check(
    kappa: float,
    lam: float,
    b: float,
    t: int,
    M: int,
    seed: int = 0,
    nodes: int = 12,
) -> list[GaussianCheckRow]:
    """Compare population dynamics at large b against the Gaussian limit.

    Runs the free-initialized recursion and reports relative deviations of
    the empirical means/variances of both classes from the limiting values
    -log((1-kappa)/kappa) -/+ mu^(t)/2 and mu^(t).
    """
    from .model import params_for_population
    from .population import pd_init, pd_step

    params = params_for_population(kappa, b, lam)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    pop = pd_init(params, M, "free", rng)
    mus = mu_sequence(lam, kappa, t, nodes)
    center = -math.log((1.0 - kappa) / kappa)
    rows = []
    for step in range(1, t + 1):
        pop = pd_step(pop, params, rng)
        mu = float(mus[step])
        mean0, mean1 = float(pop.xi0.mean()), float(pop.xi1.mean())
        var0 = float(pop.xi0.var(ddof=1))
        var1 = float(pop.xi1.var(ddof=1))
        pm0 = center - mu / 2.0
        pm1 = center + mu / 2.0
        rows.append(
            GaussianCheckRow(
                t=step,
                mu=mu,
                mean0=mean0,
                mean1=mean1,
                var0=var0,
                var1=var1,
                rel_mean0=abs(mean0 - pm0) / abs(pm0),
                rel_mean1=abs(mean1 - pm1) / abs(pm1),
                rel_var0=abs(var0 - mu) / mu,
                rel_var1=abs(var1 - mu) / mu,
            )
        )
    return rows
