"""Ground-truth machinery at desk scale.

Exhaustive search over fixed-size vertex subsets, exact marginals of the
local (factorized) model and of the full posterior by state enumeration,
and the closed-form lower bound on exhaustive-search accuracy.  Guards
keep every routine within desk-scale limits; nothing here is meant to
scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import GuardError
from .model import ModelParams, PlantedGraph, count_edges_within

__all__ = [
    "ExhaustiveResult",
    "exhaustive_search",
    "prop1_bound",
    "prop1_bound_infinite_degree",
    "exact_local_marginals",
    "exact_posterior_marginals",
]

_SUBSET_GUARD = 10**8
_ENUM_GUARD = 20


@dataclass(frozen=True)
class ExhaustiveResult:
    """Best size-k subset by internal edge count."""

    best_set: np.ndarray
    best_edge_count: int
    ties: int
    overlap: int


def exhaustive_search(graph: PlantedGraph, k: int) -> ExhaustiveResult:
    """Maximize the internal edge count over all size-k subsets.

    Subsets are enumerated in lexicographic order with incremental
    bitmask edge-count updates (amortized O(1) set changes per subset);
    on ties the lexicographically smallest subset wins, which is the
    first one encountered.
    """
    n = graph.n
    if k < 1 or k > n:
        raise ValueError("k must satisfy 1 <= k <= n")
    if math.comb(n, k) > _SUBSET_GUARD:
        raise GuardError("instance too large: C(n, k) exceeds the subset guard")

    adj = [0] * n
    for x, y in zip(graph.u.tolist(), graph.v.tolist()):
        adj[x] |= 1 << y
        adj[y] |= 1 << x

    comb = list(range(k))
    mask = (1 << k) - 1
    count = sum((adj[x] & mask).bit_count() for x in comb) // 2
    best_count, best_comb, ties = count, tuple(comb), 1

    while True:
        p = k - 1
        while p >= 0 and comb[p] == n - k + p:
            p -= 1
        if p < 0:
            break
        # drop the tail positions p..k-1, then fill with the next run
        for q in range(k - 1, p - 1, -1):
            x = comb[q]
            mask ^= 1 << x
            count -= (adj[x] & mask).bit_count()
        start = comb[p] + 1
        for q in range(p, k):
            w = start + (q - p)
            count += (adj[w] & mask).bit_count()
            mask |= 1 << w
            comb[q] = w
        if count > best_count:
            best_count, best_comb, ties = count, tuple(comb), 1
        elif count == best_count:
            ties += 1

    best = np.array(best_comb, dtype=np.int64)
    overlap = int(graph.membership[best].sum())
    return ExhaustiveResult(
        best_set=best, best_edge_count=best_count, ties=ties, overlap=overlap
    )


def prop1_bound(lam: float, kappa: float, a: float, b: float) -> float:
    """Lower bound on the asymptotic exhaustive-search success probability.

    1 - (2e/sqrt(kappa)) exp(-lambda (1-kappa) b / (16 kappa a)); may be
    negative, in which case it is vacuous and reported as-is.
    """
    if not 0.0 < kappa < 0.5:
        raise ValueError("outside proposition hypothesis: need 0 < kappa < 1/2")
    if not (a > 0 and b > 0):
        raise ValueError("need positive intensities")
    return 1.0 - (2.0 * math.e / math.sqrt(kappa)) * math.exp(
        -lam * (1.0 - kappa) * b / (16.0 * kappa * a)
    )


def prop1_bound_infinite_degree(lam: float, kappa: float) -> float:
    """Large-degree limit of prop1_bound (b/a -> 1)."""
    if not 0.0 < kappa < 0.5:
        raise ValueError("outside proposition hypothesis: need 0 < kappa < 1/2")
    return 1.0 - (2.0 * math.e / math.sqrt(kappa)) * math.exp(
        -lam * (1.0 - kappa) / (16.0 * kappa)
    )


def _enumerate_log_weights(graph: PlantedGraph, log_pair_all: float,
                           log_vertex: float, log_edge: float):
    """Log-weights of all 2^n membership states.

    log w(x) = |x| log_vertex + C(|x|, 2) log_pair_all + E(x) log_edge,
    where E(x) counts graph edges inside the support of x.
    """
    n = graph.n
    if n > _ENUM_GUARD:
        raise GuardError("enumeration guard: n must be at most 20")
    states = np.arange(1 << n, dtype=np.uint32)
    pops = np.bitwise_count(states).astype(np.int64)
    edge_cnt = np.zeros(1 << n, dtype=np.int64)
    for x, y in zip(graph.u.tolist(), graph.v.tolist()):
        edge_cnt += (states >> np.uint32(x)) & (states >> np.uint32(y)) & 1
    logw = (
        pops * log_vertex
        + (pops * (pops - 1) // 2) * log_pair_all
        + edge_cnt * log_edge
    )
    return states, logw.astype(np.float64)


def _marginal_log_odds(n: int, states: np.ndarray, logw: np.ndarray) -> np.ndarray:
    xi = np.empty(n)
    for i in range(n):
        one = ((states >> np.uint32(i)) & 1).astype(bool)
        xi[i] = logsumexp(logw[one]) - logsumexp(logw[~one])
    return xi


def exact_local_marginals(graph: PlantedGraph, params: ModelParams) -> np.ndarray:
    """Exact log-odds under the factorized model by full enumeration.

    The model is p(x) proportional to prod_edges rho^{x_i x_j} *
    prod_i gamma^{x_i}, i.e. the graphical model the message recursion
    solves, with no global size constraint.  Tree instances make this an
    exactness oracle for the message passing.
    """
    states, logw = _enumerate_log_weights(
        graph,
        log_pair_all=0.0,
        log_vertex=math.log(params.gamma),
        log_edge=math.log(params.rho),
    )
    return _marginal_log_odds(graph.n, states, logw)


def exact_posterior_marginals(graph: PlantedGraph, params: ModelParams) -> np.ndarray:
    """Exact log-odds under the true finite-n posterior by enumeration.

    Includes the non-edge factors ((1 - a/n)/(1 - b/n))^{x_i x_j} over all
    pairs and the finite-n edge ratio rho_n = (a/b)(1 - b/n)/(1 - a/n).
    """
    n = graph.n
    if params.a >= n or params.b >= n:
        raise ValueError("need a < n and b < n for the finite-n posterior")
    log_rho_n = math.log(params.a / params.b) + math.log1p(-params.b / n) - math.log1p(-params.a / n)
    states, logw = _enumerate_log_weights(
        graph,
        log_pair_all=math.log1p(-params.a / n) - math.log1p(-params.b / n),
        log_vertex=math.log(params.kappa / (1.0 - params.kappa)),
        log_edge=log_rho_n,
    )
    return _marginal_log_odds(graph.n, states, logw)
