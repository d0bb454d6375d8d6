"""Population-dynamics solver for the distributional field recursion.

The limiting laws of the per-vertex log-likelihood ratios, conditional on
membership, satisfy a distributional fixed-point equation driven by
Poisson offspring counts:

    xi0' = h + sum_{i<=L00} f(xi0_i) + sum_{i<=L01} f(xi1_i),
    xi1' = h + sum_{i<=L10} f(xi0_i) + sum_{i<=L11} f(xi1_i),

with L00, L10 ~ Poisson((1-kappa) b), L01 ~ Poisson(kappa b),
L11 ~ Poisson(kappa a).  Each law is represented by M samples and the
recursion is applied samplewise with replacement draws from the previous
populations.

By Bayes consistency the two laws are tied: dP1/dP0 = ((1-kappa)/kappa) e^xi,
hence E e^{xi0} = kappa/(1-kappa) at every step.  Finite-M noise slowly
drifts this moment, so each iteration (by default) projects the class-0
population back onto the constraint with an exponential tilt, materialized
by weighted resampling plus an exact mean-matching log shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import _backend
from .kernel import log_odds_threshold
from .model import ModelParams

__all__ = [
    "Population",
    "CavityCurvePoint",
    "pd_init",
    "pd_step",
    "run_pd",
    "pd_psucc",
    "pd_psucc_stderr",
    "bethe_free_energy",
    "nishimori_diagnostics",
    "pd_curve",
    "estimate_lambda_s",
    "write_population_file",
    "read_population_file",
]

# samples per index-drawing block; fixed so that the random stream (and
# hence every result) is independent of memory considerations
_BLOCK_DRAW_BUDGET = 1 << 22


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass
class Population:
    """Paired sample arrays for the conditional field laws at time t."""

    xi0: np.ndarray
    xi1: np.ndarray
    t: int
    init_mode: str

    @property
    def M(self) -> int:
        return int(self.xi0.shape[0])


def pd_init(params: ModelParams, M: int, mode: str, seed) -> Population:
    """Initial populations.

    free -- both classes at the atom log(kappa/(1-kappa)), t = 0.
    plus -- the first step is taken analytically from the +/-inf boundary
    (f(-inf) = 0, f(+inf) = log rho), so the returned population is at
    t = 1 with xi_c = h + Poisson(mean_c) * log rho.
    """
    if M < 1000:
        raise ValueError("population size M must be at least 1000")
    kappa = params.kappa
    if mode == "free":
        atom = log_odds_threshold(kappa)
        return Population(
            xi0=np.full(M, atom), xi1=np.full(M, atom), t=0, init_mode="free"
        )
    if mode == "plus":
        rng = _as_rng(seed)
        logrho = math.log(params.rho)
        l01 = rng.poisson(kappa * params.b, M)
        l11 = rng.poisson(kappa * params.a, M)
        return Population(
            xi0=params.h + l01 * logrho,
            xi1=params.h + l11 * logrho,
            t=1,
            init_mode="plus",
        )
    raise ValueError(f"unknown init mode {mode!r}")


def _gathered_sums(rng, values: np.ndarray, counts: np.ndarray, mean: float) -> np.ndarray:
    """Sum of ``counts[i]`` uniform draws from ``values``, per sample.

    Index draws happen in fixed-size sample blocks (sized from the Poisson
    mean only) so results do not depend on memory layout choices.
    """
    M = counts.shape[0]
    src = values.shape[0]
    out = np.empty(M, dtype=np.float64)
    block = max(1, min(M, int(_BLOCK_DRAW_BUDGET // (mean + 1.0))))
    for s0 in range(0, M, block):
        c = counts[s0 : s0 + block]
        idx = rng.integers(0, src, size=int(c.sum()), dtype=np.int64)
        out[s0 : s0 + block] = _backend.gather_segment_sum(values, idx, c)
    return out


def _tilt_resample(rng, xi: np.ndarray, target: float) -> np.ndarray:
    """Project samples onto mean(e^xi) = target.

    Exponential tilt w ~ exp(theta xi) with theta chosen by a safeguarded
    Newton solve, weighted multinomial resampling through the inverse CDF,
    then an additive log shift making the moment exact.

    """
    M = xi.shape[0]

    def g(theta):
        # log of the theta-tilted mean of e^xi, minus log target
        return float(
            logsumexp((theta + 1.0) * xi) - logsumexp(theta * xi) - math.log(target)
        )

    dev = g(0.0)
    if abs(dev) > 1e-14:
        theta, val = 0.0, dev
        lo, hi = -8.0, 8.0  # bracket for the safeguard
        for _ in range(40):
            if abs(val) < 1e-12:
                break
            if val > 0:
                hi = min(hi, theta)
            else:
                lo = max(lo, theta)
            h = 1e-4
            slope = (g(theta + h) - g(theta - h)) / (2 * h)
            step = -val / slope if slope > 0 else 0.0
            theta = theta + step
            if not lo < theta < hi:
                theta = 0.5 * (lo + hi)
            val = g(theta)
        z = theta * xi
        w = np.exp(z - z.max())
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, rng.random(M), side="right")
        xi = xi[np.minimum(idx, M - 1)]
    # exact first-moment restoration (shift is O(1/sqrt(M)))
    shift = math.log(target) - (float(logsumexp(xi)) - math.log(M))
    return xi + shift


def pd_step(pop: Population, params: ModelParams, seed, reweight: bool = True) -> Population:
    """One synchronous step of the distributional recursion.

    Deterministic given (pop, params, seed).  The draw order is fixed:
    the four Poisson count arrays (00, 01, 10, 11), then index blocks per
    (class, source) in that order, then the reweighting draws.
    """
    rng = _as_rng(seed)
    kappa, a, b, h = params.kappa, params.a, params.b, params.h
    rho = params.rho
    M = pop.M

    mean00 = (1.0 - kappa) * b
    mean01 = kappa * b
    mean10 = (1.0 - kappa) * b
    mean11 = kappa * a
    c00 = rng.poisson(mean00, M)
    c01 = rng.poisson(mean01, M)
    c10 = rng.poisson(mean10, M)
    c11 = rng.poisson(mean11, M)

    fx0 = _backend.f_values(pop.xi0, rho)
    fx1 = _backend.f_values(pop.xi1, rho)

    xi0 = h + _gathered_sums(rng, fx0, c00, mean00) + _gathered_sums(rng, fx1, c01, mean01)
    xi1 = h + _gathered_sums(rng, fx0, c10, mean10) + _gathered_sums(rng, fx1, c11, mean11)

    if reweight:
        xi0 = _tilt_resample(rng, xi0, kappa / (1.0 - kappa))
    return Population(xi0=xi0, xi1=xi1, t=pop.t + 1, init_mode=pop.init_mode)


def pd_psucc(pop: Population, kappa: float, threshold: float | None = None) -> float:
    """Success probability read off the populations.

    P0(xi < theta) + P1(xi >= theta) - 1 with theta = log(kappa/(1-kappa))
    unless overridden.  Ties at the threshold count on the class-1 side,
    which makes the free-init t=0 value exactly 0.
    """
    theta = log_odds_threshold(kappa) if threshold is None else threshold
    p0 = float(np.mean(pop.xi0 < theta))
    p1 = float(np.mean(pop.xi1 >= theta))
    return p0 + p1 - 1.0


def pd_psucc_stderr(pop: Population, kappa: float, threshold: float | None = None) -> float:
    """Binomial standard error of the pd_psucc estimate."""
    theta = log_odds_threshold(kappa) if threshold is None else threshold
    p0 = float(np.mean(pop.xi0 < theta))
    p1 = float(np.mean(pop.xi1 >= theta))
    return math.sqrt((p0 * (1 - p0) + p1 * (1 - p1)) / pop.M)


@dataclass
class NishimoriReport:
    """Bayes-symmetry diagnostics of a population pair."""

    moment0: float          # mean e^{xi0}; target kappa/(1-kappa)
    moment0_sd: float       # sample SD of e^{xi0}
    x_t: float              # ((1-kappa)/kappa)^2 * mean e^{2 xi0}
    x_t_sd: float           # sample SD of the x_t summand
    tilt_discrepancy: float  # sup-distance between tilted-P0 and P1 CDFs


def nishimori_diagnostics(pop: Population, kappa: float) -> NishimoriReport:
    e0 = np.exp(np.clip(pop.xi0, None, 700.0))
    ratio = (1.0 - kappa) / kappa
    x_summand = (ratio * e0) ** 2
    # reweight P0 by e^xi (normalized) and compare with the P1 samples
    order = np.argsort(pop.xi0)
    w = e0[order]
    cw = np.cumsum(w)
    cw /= cw[-1]
    xi0s = pop.xi0[order]
    xi1s = np.sort(pop.xi1)
    grid = np.concatenate((xi0s, xi1s))
    pos = np.searchsorted(xi0s, grid, side="right")
    f_tilted = np.where(pos > 0, cw[np.maximum(pos - 1, 0)], 0.0)
    f_one = np.searchsorted(xi1s, grid, side="right") / pop.M
    return NishimoriReport(
        moment0=float(e0.mean()),
        moment0_sd=float(e0.std()),
        x_t=float(x_summand.mean()),
        x_t_sd=float(x_summand.std()),
        tilt_discrepancy=float(np.abs(f_tilted - f_one).max()),
    )


def bethe_free_energy(pop: Population, params: ModelParams, mc_rounds: int, seed):
    """Monte Carlo estimate of the free-energy density (mutual information
    per vertex) at the populations' fixed point.

    Stratifies exactly over the edge-endpoint classes and the vertex
    mixture classes, drawing ``mc_rounds`` samples per stratum; returns
    (estimate, standard error).
    """
    rng = _as_rng(seed)
    kappa, a, b = params.kappa, params.a, params.b
    rho = params.rho
    z = kappa**2 * a + (1.0 - kappa**2) * b
    n = int(mc_rounds)

    sig0 = expit(pop.xi0)
    sig1 = expit(pop.xi1)

    def edge_class(s_left, s_right):
        i = rng.integers(0, s_left.shape[0], n)
        j = rng.integers(0, s_right.shape[0], n)
        vals = np.log1p((rho - 1.0) * s_left[i] * s_right[j])
        return float(vals.mean()), float(vals.var() / n)

    # endpoint-class weights: both in S, exactly one, neither
    w11 = kappa**2 * a / z
    w01 = 2.0 * kappa * (1.0 - kappa) * b / z
    w00 = (1.0 - kappa) ** 2 * b / z
    m11, v11 = edge_class(sig1, sig1)
    m01, v01 = edge_class(sig0, sig1)
    m00, v00 = edge_class(sig0, sig0)
    pref = 0.5 * z
    psi_e = pref * (w11 * m11 + w01 * m01 + w00 * m00)
    var_e = pref**2 * (w11**2 * v11 + w01**2 * v01 + w00**2 * v00)

    fx0 = _backend.f_values(pop.xi0, rho)
    fx1 = _backend.f_values(pop.xi1, rho)

    def vertex_class(mean1):
        c0 = rng.poisson((1.0 - kappa) * b, n)
        c1 = rng.poisson(mean1, n)
        s = _gathered_sums(rng, fx0, c0, (1.0 - kappa) * b)
        s += _gathered_sums(rng, fx1, c1, mean1)
        vals = np.logaddexp(math.log1p(-kappa), math.log(kappa) - kappa * (a - b) + s)
        return float(vals.mean()), float(vals.var() / n)

    m_in, v_in = vertex_class(kappa * a)      # vertex in S
    m_out, v_out = vertex_class(kappa * b)    # vertex not in S
    psi_v = kappa * m_in + (1.0 - kappa) * m_out
    var_v = kappa**2 * v_in + (1.0 - kappa) ** 2 * v_out

    psi_0 = 0.5 * kappa**2 * (a * math.log(a / b) - 2.0 * a + 2.0 * b)
    return psi_e - psi_v + psi_0, math.sqrt(var_e + var_v)


@dataclass
class PDRun:
    """A finished population-dynamics run with optional trajectories."""

    population: Population
    psucc: np.ndarray | None = None        # per iteration, indices 0..T
    moment0: np.ndarray | None = None
    moment0_sd: np.ndarray | None = None
    x_t: np.ndarray | None = None
    x_t_sd: np.ndarray | None = None


def run_pd(
    params: ModelParams,
    M: int,
    T: int,
    mode: str,
    seed,
    reweight: bool = True,
    track_psucc: bool = False,
    track_moments: bool = False,
) -> PDRun:
    """Iterate the recursion to t = T from the given initial condition."""
    rng = _as_rng(seed)
    pop = pd_init(params, M, mode, rng)
    traj: dict[str, list] = {k: [] for k in ("psucc", "m0", "m0sd", "xt", "xtsd")}

    def record():
        if track_psucc:
            traj["psucc"].append(pd_psucc(pop, params.kappa))
        if track_moments:
            rep = nishimori_diagnostics(pop, params.kappa)
            traj["m0"].append(rep.moment0)
            traj["m0sd"].append(rep.moment0_sd)
            traj["xt"].append(rep.x_t)
            traj["xtsd"].append(rep.x_t_sd)

    record()
    while pop.t < T:
        pop = pd_step(pop, params, rng, reweight=reweight)
        record()
    return PDRun(
        population=pop,
        psucc=np.array(traj["psucc"]) if track_psucc else None,
        moment0=np.array(traj["m0"]) if track_moments else None,
        moment0_sd=np.array(traj["m0sd"]) if track_moments else None,
        x_t=np.array(traj["xt"]) if track_moments else None,
        x_t_sd=np.array(traj["xtsd"]) if track_moments else None,
    )


@dataclass
class CavityCurvePoint:
    """One SNR grid point of the success/free-energy curves."""

    lam: float
    psucc_fr: float
    psucc_fr_se: float
    psucc_pl: float
    psucc_pl_se: float
    psi_fr: float
    psi_fr_se: float
    psi_pl: float
    psi_pl_se: float
    lambda_s_flag: bool = False


def _curve_task(args):
    (kappa, b, lam, M, T, mode, master, li, si, reweight, mc_rounds) = args
    from .model import params_for_population
    from .seeds import task_rng

    params = params_for_population(kappa, b, lam)
    rng = task_rng(master, 1, li, si, 0 if mode == "free" else 1)
    run = run_pd(params, M, T, mode, rng, reweight=reweight)
    psucc = pd_psucc(run.population, kappa)
    psucc_se = pd_psucc_stderr(run.population, kappa)
    psi, psi_se = bethe_free_energy(run.population, params, mc_rounds, rng)
    return li, si, mode, psucc, psucc_se, psi, psi_se


def pd_curve(
    lambdas,
    kappa: float,
    b: float,
    M: int,
    T: int,
    n_seeds: int,
    master_seed: int,
    reweight: bool = True,
    mc_rounds: int = 100_000,
    threads: int = 1,
) -> list[CavityCurvePoint]:
    """Success probability and free energy over an SNR grid.

    Runs both initializations for every (lambda, seed) pair, averages over
    seeds, and flags the grid cell where the free energies cross.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError("empty lambda grid")
    tasks = [
        (kappa, b, lam, M, T, mode, master_seed, li, si, reweight, mc_rounds)
        for li, lam in enumerate(lambdas)
        for si in range(n_seeds)
        for mode in ("free", "plus")
    ]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_curve_task, tasks, chunksize=1))
    else:
        results = [_curve_task(t) for t in tasks]

    acc: dict[tuple[int, str], list] = {}
    for li, si, mode, psucc, psucc_se, psi, psi_se in results:
        acc.setdefault((li, mode), []).append((psucc, psucc_se, psi, psi_se))

    def reduce(li, mode):
        rows = acc[(li, mode)]
        ps = np.array([r[0] for r in rows])
        ps_se = np.array([r[1] for r in rows])
        fe = np.array([r[2] for r in rows])
        fe_se = np.array([r[3] for r in rows])
        k = len(rows)
        if k > 1:
            return (
                float(ps.mean()), float(ps.std(ddof=1) / math.sqrt(k)),
                float(fe.mean()), max(float(fe.std(ddof=1) / math.sqrt(k)),
                                      float(np.sqrt(np.mean(fe_se**2) / k))),
            )
        return float(ps[0]), float(ps_se[0]), float(fe[0]), float(fe_se[0])

    points = []
    for li, lam in enumerate(lambdas):
        pf, pf_se, ff, ff_se = reduce(li, "free")
        pp, pp_se, fp, fp_se = reduce(li, "plus")
        points.append(
            CavityCurvePoint(
                lam=lam,
                psucc_fr=pf, psucc_fr_se=pf_se,
                psucc_pl=pp, psucc_pl_se=pp_se,
                psi_fr=ff, psi_fr_se=ff_se,
                psi_pl=fp, psi_pl_se=fp_se,
            )
        )
    estimate_lambda_s(points)  # sets the crossing flags in place
    return points


def estimate_lambda_s(points: list[CavityCurvePoint]) -> float | None:
    """Free-energy crossing by linear interpolation over the grid.

    The free solution has the lower free energy below the transition, the
    plus solution above it; the crossing is located on the first grid cell
    where the significant sign of (psi_pl - psi_fr) flips from + to -.
    Flags the bracketing points and returns the interpolated lambda.
    """
    if len(points) < 2:
        return None
    d = np.array([p.psi_pl - p.psi_fr for p in points])
    se = np.array([math.hypot(p.psi_pl_se, p.psi_fr_se) for p in points])
    for i in range(len(points) - 1):
        significant = max(abs(d[i]), abs(d[i + 1])) > 2.0 * max(se[i], se[i + 1], 1e-15)
        if d[i] > 0.0 >= d[i + 1] and significant:
            points[i].lambda_s_flag = True
            points[i + 1].lambda_s_flag = True
            lam0, lam1 = points[i].lam, points[i + 1].lam
            return float(lam0 + (lam1 - lam0) * d[i] / (d[i] - d[i + 1]))
    return None


def write_population_file(path, xi: np.ndarray, cls: int, t: int, M: int, seed: int) -> None:
    """One-class snapshot: header line then one sample per line."""
    if cls not in (0, 1):
        raise ValueError("cls must be 0 or 1")
    with open(path, "w") as fh:
        fh.write(f"class={cls} t={t} M={M} seed={seed}\n")
        for x in xi:
            fh.write(f"{float(x)!r}\n")


def read_population_file(path):
    with open(path) as fh:
        header = fh.readline().split()
        meta = dict(kv.split("=") for kv in header)
        xi = np.array([float(line) for line in fh if line.strip()])
    cls, t, M, seed = (int(meta[k]) for k in ("class", "t", "M", "seed"))
    if xi.shape[0] != M:
        raise ValueError("sample count does not match header M")
    return xi, cls, t, M, seed
