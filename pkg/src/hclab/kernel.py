"""Scalar kernel shared by the graph and distributional recursions.

All log-likelihood ratios are in nats.  The central object is the edge
message function

    f(xi) = log((1 + rho * exp(xi)) / (1 + exp(xi))),    rho = a / b,

which maps an incoming log-odds value to the log-odds increment carried
by one edge.  ``+inf`` and ``-inf`` are legal inputs and map to the
analytic limits ``log(rho)`` and ``0``; they encode full side
information, which is how the "plus" initial condition is expressed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

__all__ = [
    "KernelParams",
    "f_message",
    "field_h",
    "log_odds_threshold",
    "binary_entropy",
    "x_star",
]

#: Largest SNR for which x = exp(lambda * x) has a solution.
LAMBDA_MAX = math.exp(-1.0)


@dataclass(frozen=True)
class KernelParams:
    """Scalar parameters entering the message recursion.

    rho    -- edge intensity ratio a/b (attractive regime: rho > 1)
    h      -- external field absorbing the mean effect of non-edges
    theta  -- decision threshold log(kappa / (1 - kappa))
    """

    rho: float
    h: float
    theta: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @classmethod
    def from_intensities(cls, a: float, b: float, kappa: float) -> "KernelParams":
        return cls(
            rho=a / b,
            h=field_h(a, b, kappa),
            theta=log_odds_threshold(kappa),
        )


def f_message(xi, rho: float):
    """Edge message function ``log((1 + rho e^xi) / (1 + e^xi))``.

    Accepts scalars or arrays; +/-inf map to the analytic limits.
    Evaluation branches at xi = 0 so that the exponential argument is
    never positive, which keeps the formula overflow-free for any xi.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    arr = np.asarray(xi, dtype=np.float64)
    if np.isnan(arr).any():
        raise ValueError("invalid field: NaN log-odds value")
    out = _backend.f_values(np.atleast_1d(arr), rho)
    if arr.ndim == 0:
        return float(out[0])
    return out


def field_h(a: float, b: float, kappa: float) -> float:
    """External field ``-kappa (a - b) - log((1 - kappa) / kappa)``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    return -kappa * (a - b) - math.log((1.0 - kappa) / kappa)


def log_odds_threshold(kappa: float) -> float:
    """Optimal-test decision threshold ``log(kappa / (1 - kappa))``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    return math.log(kappa / (1.0 - kappa))


def binary_entropy(kappa: float) -> float:
    """Entropy in nats of a Bernoulli(kappa) variable; H(0) = H(1) = 0."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("invalid fraction: kappa must lie in [0, 1]")
    if kappa == 0.0 or kappa == 1.0:
        return 0.0
    return -kappa * math.log(kappa) - (1.0 - kappa) * math.log(1.0 - kappa)


def x_star(lam: float) -> float:
    """Smallest positive solution of ``x = exp(lam * x)``.

    Exists only for 0 < lam <= 1/e; the root lies in [1, e] and equals e
    at lam = 1/e.  Found by bisection on ``log(x) - lam * x`` (same roots,
    strictly better conditioned near the tangency), then checked against
    the residual ``|x - exp(lam x)| < 1e-12``.
    """
    if not lam > 0:
        raise ValueError("no fixed point: lambda must be positive")
    if lam > LAMBDA_MAX * (1.0 + 1e-12):
        raise ValueError("no fixed point: equation has no solution for lambda > 1/e")

    def g(x: float) -> float:
        return math.log(x) - lam * x

    lo, hi = 1.0, math.e
    if g(hi) <= 0.0:
        # Tangency (lam = 1/e up to rounding): the two roots merge at e.
        if g(hi) > -4e-16 * hi or lam >= LAMBDA_MAX * (1.0 - 1e-12):
            return math.e
    # g(1) = -lam < 0 and g(e) >= 0, and g crosses upward at the smallest root.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    root = 0.5 * (lo + hi)
    if abs(root - math.exp(lam * root)) >= 1e-12:
        raise ArithmeticError("x_star bisection failed residual check")
    return root
