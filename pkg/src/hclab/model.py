"""Problem parameterization, planted-graph sampling, and the success metric.

The generative model: each vertex independently belongs to the hidden set
with probability kappa; conditionally on the hidden set S, every pair
inside S is an edge with probability a/n and every other pair with
probability b/n.  Sampling cost is O(|E| + n) via geometric skip sampling
over the lexicographically ordered pair indices, so n up to 10^6 is fine.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GuardError
from .kernel import field_h, log_odds_threshold

__all__ = [
    "ModelParams",
    "PlantedGraph",
    "params_from_snr",
    "params_for_population",
    "snr",
    "sample_graph",
    "empirical_psucc",
    "count_edges_within",
    "write_graph",
    "read_graph",
]


@dataclass(frozen=True)
class ModelParams:
    """Model parameters (n, a, b, kappa) plus derived quantities.

    ``n`` may be None for infinite-graph (population dynamics / scalar
    theory) usage; all finite-sampling checks then move to sample time.
    """

    n: int | None
    a: float
    b: float
    kappa: float

    def __post_init__(self):
        if self.n is not None and (self.n < 1 or self.n != int(self.n)):
            raise ValueError("n must be a positive integer")
        if not (self.a >= self.b >= 0.0):
            raise ValueError("need a >= b >= 0")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("invalid fraction: kappa must lie in [0, 1]")

    @property
    def rho(self) -> float:
        if self.b <= 0:
            raise ValueError("rho undefined for b = 0")
        return self.a / self.b

    @property
    def h(self) -> float:
        return field_h(self.a, self.b, self.kappa)

    @property
    def theta(self) -> float:
        return log_odds_threshold(self.kappa)

    @property
    def gamma(self) -> float:
        if self.kappa >= 1.0:
            raise ValueError("gamma undefined for kappa = 1")
        return math.exp(-self.kappa * (self.a - self.b)) * self.kappa / (1.0 - self.kappa)

    @property
    def deg_out(self) -> float:
        return self.b

    @property
    def deg_in(self) -> float:
        return self.kappa * self.a + (1.0 - self.kappa) * self.b

    @property
    def snr(self) -> float:
        return snr(self)


def snr(params: ModelParams) -> float:
    """Signal-to-noise ratio kappa^2 (a-b)^2 / ((1-kappa) b)."""
    if params.b <= 0 or params.kappa >= 1.0:
        raise ValueError("snr undefined for b = 0 or kappa = 1")
    d = params.a - params.b
    return params.kappa**2 * d * d / ((1.0 - params.kappa) * params.b)


def params_from_snr(kappa: float, b: float, lam: float, n: int | None) -> ModelParams:
    """Invert the SNR relation: a = b + sqrt(lam (1-kappa) b) / kappa."""
    if not 0.0 < kappa < 1.0:
        raise ValueError("invalid fraction: kappa must lie in (0, 1)")
    if not b > 0:
        raise ValueError("b must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    a = b + math.sqrt(lam * (1.0 - kappa) * b) / kappa
    if n is not None and a / n > 1.0:
        raise GuardError("supercritical edge probability: a/n > 1")
    return ModelParams(n=n, a=a, b=b, kappa=kappa)


def params_for_population(kappa: float, b: float, lam: float) -> ModelParams:
    """Infinite-graph parameters for the distributional recursion."""
    return params_from_snr(kappa, b, lam, None)


@dataclass
class PlantedGraph:
    """A sampled graph with its ground-truth hidden-set membership.

    Edges are stored as sorted arrays (u[k], v[k]) with u[k] < v[k],
    lexicographically increasing; the CSR adjacency view is built lazily
    and the two views are consistent by construction.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    membership: np.ndarray
    seed: int
    kappa: float
    a: float
    b: float

    @property
    def num_edges(self) -> int:
        return int(self.u.shape[0])

    @property
    def edges(self) -> np.ndarray:
        """(num_edges, 2) array of unordered pairs with u < v."""
        return np.column_stack((self.u, self.v))

    @cached_property
    def _csr(self):
        starts = np.concatenate((self.u, self.v))
        ends = np.concatenate((self.v, self.u))
        deg = np.bincount(starts, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        adj = ends[np.argsort(starts, kind="stable")]
        return indptr, adj

    def neighbors(self, i: int) -> np.ndarray:
        indptr, adj = self._csr
        return adj[indptr[i] : indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        indptr, _ = self._csr
        return np.diff(indptr)

    @cached_property
    def _directed(self):
        tail = np.empty(2 * self.num_edges, dtype=np.int64)
        head = np.empty(2 * self.num_edges, dtype=np.int64)
        tail[0::2] = self.u
        head[0::2] = self.v
        tail[1::2] = self.v
        head[1::2] = self.u
        return tail, head

    def directed_endpoints(self):
        """Interleaved directed-edge endpoint arrays (tail, head).

        Directed ids 2e and 2e+1 are the two orientations of edge e, so
        the reverse of directed edge d is d ^ 1.
        """
        return self._directed


def _pair_offsets(n: int, i: np.ndarray) -> np.ndarray:
    # number of pairs (x, y), x < y, with x < i, in lexicographic order
    return i * (2 * n - i - 1) // 2


def _unrank_pairs(n: int, t: np.ndarray):
    """Map lexicographic pair ranks t to (i, j), 0 <= i < j < n."""
    tf = t.astype(np.float64)
    disc = (2 * n - 1) ** 2 - 8.0 * tf
    i = np.floor((2 * n - 1 - np.sqrt(disc)) / 2.0).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    # float sqrt can land one row off; fix up exactly
    too_high = _pair_offsets(n, i) > t
    i[too_high] -= 1
    too_low = _pair_offsets(n, i + 1) <= t
    i[too_low] += 1
    j = t - _pair_offsets(n, i) + i + 1
    return i, j


def _sample_ranks(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Strictly increasing ranks in [0, total), each included with prob p.

    Geometric skip sampling: gaps between successive selections are drawn
    in deterministic batches sized from the expected count, so the random
    stream (hence the graph) depends only on (total, p, generator state).
    """
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    log1mp = math.log1p(-p)
    chunks = []
    pos = 0
    while pos < total:
        expected = (total - pos) * p
        m = int(expected + 6.0 * math.sqrt(expected + 1.0) + 16.0)
        gaps = np.floor(np.log1p(-rng.random(m)) / log1mp).astype(np.int64)
        ranks = pos + np.cumsum(gaps + 1) - 1
        if ranks[-1] >= total:
            chunks.append(ranks[ranks < total])
            pos = total
        else:
            chunks.append(ranks)
            pos = int(ranks[-1]) + 1
    return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]


def sample_graph(
    params: ModelParams, seed: int, fixed_size: bool = False
) -> PlantedGraph:
    """Sample a planted graph; deterministic given (params, seed).

    fixed_size=True plants exactly floor(kappa n) members chosen uniformly
    (the variant used for exhaustive-search experiments) instead of i.i.d.
    Bernoulli(kappa) membership.
    """
    if params.n is None:
        raise ValueError("sampling requires finite n")
    n = int(params.n)
    if params.a > n or params.b > n:
        raise GuardError("supercritical edge probability: a/n > 1")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))

    membership = np.zeros(n, dtype=bool)
    if fixed_size:
        k = int(math.floor(params.kappa * n))
        members = rng.choice(n, size=k, replace=False)
        membership[members] = True
    else:
        membership = rng.random(n) < params.kappa
    members = np.flatnonzero(membership).astype(np.int64)
    m = members.shape[0]

    # background stream: every pair at b/n, then drop pairs inside S
    # (those are owned by the within-S stream at a/n)
    ranks = _sample_ranks(rng, n * (n - 1) // 2, params.b / n)
    bu, bv = _unrank_pairs(n, ranks)
    keep = ~(membership[bu] & membership[bv])
    bu, bv = bu[keep], bv[keep]

    # within-S stream at a/n over the member list's pair space
    ranks = _sample_ranks(rng, m * (m - 1) // 2, params.a / n)
    if ranks.shape[0] and m >= 2:
        si, sj = _unrank_pairs(m, ranks)
        su, sv = members[si], members[sj]
    else:
        su = sv = np.empty(0, dtype=np.int64)

    u = np.concatenate((bu, su))
    v = np.concatenate((bv, sv))
    order = np.lexsort((v, u))
    return PlantedGraph(
        n=n,
        u=np.ascontiguousarray(u[order]),
        v=np.ascontiguousarray(v[order]),
        membership=membership,
        seed=int(seed),
        kappa=params.kappa,
        a=params.a,
        b=params.b,
    )


def empirical_psucc(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Rescaled success probability of a test against the ground truth.

    P(T=1 | in S) + P(T=0 | not in S) - 1, estimated by within-class
    fractions; 0 for a constant test, 1 for a perfect one, -1 for the
    complement.
    """
    estimate = np.asarray(estimate, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if estimate.shape != truth.shape:
        raise ValueError("estimate and truth must have the same length")
    n1 = int(truth.sum())
    n0 = truth.shape[0] - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("degenerate ground truth: need both classes present")
    tpr = float(estimate[truth].sum()) / n1
    tnr = float((~estimate[~truth]).sum()) / n0
    return tpr + tnr - 1.0


def count_edges_within(graph: PlantedGraph, subset) -> int:
    """Exact number of edges with both endpoints in ``subset``."""
    subset = np.asarray(subset)
    if subset.dtype == bool:
        if subset.shape[0] != graph.n:
            raise ValueError("invalid subset: mask length mismatch")
        mask = subset
    else:
        subset = subset.astype(np.int64)
        if subset.size and (subset.min() < 0 or subset.max() >= graph.n):
            raise ValueError("invalid subset: vertex out of range")
        mask = np.zeros(graph.n, dtype=bool)
        mask[subset] = True
    return int(np.count_nonzero(mask[graph.u] & mask[graph.v]))


_HEADER_RE = re.compile(
    r"^n=(\S+) kappa=(\S+) a=(\S+) b=(\S+) seed=(\S+)$"
)


def write_graph(graph: PlantedGraph, path) -> None:
    """Plain-text graph file; round-trips bit-exactly through read_graph."""
    with open(path, "w") as fh:
        fh.write(
            f"n={graph.n} kappa={graph.kappa!r} a={graph.a!r} "
            f"b={graph.b!r} seed={graph.seed}\n"
        )
        fh.write(" ".join("1" if x else "0" for x in graph.membership))
        fh.write("\n")
        if graph.num_edges:
            np.savetxt(fh, np.column_stack((graph.u, graph.v)), fmt="%d %d")


def read_graph(path) -> PlantedGraph:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        match = _HEADER_RE.match(header)
        if match is None:
            raise ValueError(f"malformed graph header: {header!r}")
        n = int(match.group(1))
        kappa, a, b = (float(match.group(k)) for k in (2, 3, 4))
        seed = int(match.group(5))
        bits = fh.readline().split()
        if len(bits) != n:
            raise ValueError("membership length mismatch")
        membership = np.array([x == "1" for x in bits], dtype=bool)
        rest = fh.read().split()
    pairs = np.array(rest, dtype=np.int64).reshape(-1, 2) if rest else np.empty((0, 2), dtype=np.int64)
    return PlantedGraph(
        n=n,
        u=np.ascontiguousarray(pairs[:, 0]),
        v=np.ascontiguousarray(pairs[:, 1]),
        membership=membership,
        seed=seed,
        kappa=kappa,
        a=a,
        b=b,
    )
