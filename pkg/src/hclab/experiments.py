"""Named batch experiments behind the CLI.

Every experiment writes self-describing outputs: a ``# key=value``
metadata block (full configuration, artifact version, active backend)
followed by a CSV header and rows.  Identical configuration implies
byte-identical output under a given backend, which also powers the
result cache: outputs are stored under a content hash of the canonical
configuration and restored instead of recomputed unless --force.
"""

from __future__ import annotations

import hashlib
import math
import os
import shutil
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bp import run_bp
from .config import ExperimentConfig
from .errors import GuardError
from .kernel import x_star
from .largedeg import gaussian_limit_check, phase_boundaries, psi_mu
from .model import (
    ModelParams,
    count_edges_within,
    empirical_psucc,
    params_for_population,
    params_from_snr,
    sample_graph,
    write_graph,
)
from .oracles import exhaustive_search
from .population import (
    estimate_lambda_s,
    pd_curve,
    pd_psucc,
    pd_psucc_stderr,
    bethe_free_energy,
    run_pd,
    write_population_file,
)
from .seeds import task_rng

__all__ = ["run", "cache_key"]


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, cfg: ExperimentConfig, extra_meta: dict, header: list[str],
               rows: list[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write(f"# hclab_version={__version__}\n")
        fh.write(f"# backend={_backend.BACKEND}\n")
        fh.write(f"# experiment={cfg.experiment}\n")
        for key, val in cfg.raw_items:
            fh.write(f"# config.{key}={val}\n")
        for key in sorted(extra_meta):
            fh.write(f"# {key}={_fmt(extra_meta[key])}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def cache_key(cfg: ExperimentConfig) -> str:
    text = f"{__version__}\n{_backend.BACKEND}\n{cfg.canonical_text()}"
    return hashlib.sha256(text.encode()).hexdigest()


def _graph_params(p: dict) -> ModelParams:
    if p.get("lambda") is not None:
        return params_from_snr(p["kappa"], p["b"], p["lambda"], p["n"])
    params = ModelParams(n=p["n"], a=p["a"], b=p["b"], kappa=p["kappa"])
    if params.a > p["n"]:
        raise GuardError("supercritical edge probability: a/n > 1")
    return params


def _run_generate(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    params = _graph_params(p)
    graph = sample_graph(params, p["master_seed"], fixed_size=p["fixed_size"])
    write_graph(graph, out)
    return [out]


def _run_bp_run(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    params = params_from_snr(p["kappa"], p["b"], p["lambda"], p["n"])
    rows = []
    for si in range(p["seeds"]):
        seed = int(task_rng(p["master_seed"], 2, si).integers(0, 2**63))
        graph = sample_graph(params, seed, fixed_size=p["fixed_size"])
        _, estimate, _ = run_bp(graph, params, p["t"], p["init"], p["threshold_rule"])
        rows.append(
            (si, graph.num_edges, int(graph.membership.sum()),
             empirical_psucc(estimate, graph.membership))
        )
    _write_csv(out, cfg, {}, ["seed", "num_edges", "num_members", "psucc"], rows)
    return [out]


def _run_pd_curve(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    points = pd_curve(
        p["lambda"], p["kappa"], p["b"], p["M"], p["T"], p["seeds"],
        p["master_seed"], reweight=p["reweight"], mc_rounds=p["mc_rounds"],
        threads=threads,
    )
    lam_s = estimate_lambda_s(points)
    rows = [
        (pt.lam, pt.psucc_fr, pt.psucc_fr_se, pt.psucc_pl, pt.psucc_pl_se,
         pt.psi_fr, pt.psi_fr_se, pt.psi_pl, pt.psi_pl_se)
        for pt in points
    ]
    _write_csv(
        out, cfg, {"lambda_s_estimate": lam_s},
        ["lambda", "psucc_fr", "psucc_fr_se", "psucc_pl", "psucc_pl_se",
         "psi_fr", "psi_fr_se", "psi_pl", "psi_pl_se"],
        rows,
    )
    return [out]


def _run_free_energy(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    params = params_for_population(p["kappa"], p["b"], p["lambda"])
    files = [out]
    agg = {}
    for mode in ("free", "plus"):
        ps, fe, fe_var = [], [], []
        for si in range(p["seeds"]):
            rng = task_rng(p["master_seed"], 3, si, 0 if mode == "free" else 1)
            run = run_pd(params, p["M"], p["T"], mode, rng, reweight=p["reweight"])
            psi, se = bethe_free_energy(run.population, params, p["mc_rounds"], rng)
            ps.append(pd_psucc(run.population, p["kappa"]))
            fe.append(psi)
            fe_var.append(se**2)
            if p["snapshot_prefix"] and si == 0:
                for cls, xi in ((0, run.population.xi0), (1, run.population.xi1)):
                    # snapshots land next to the CSV so the cache can restore them
                    snap = out.parent / f"{p['snapshot_prefix']}.{mode}.xi{cls}.txt"
                    write_population_file(
                        snap, xi, cls, run.population.t, run.population.M,
                        p["master_seed"],
                    )
                    files.append(snap)
        k = len(fe)
        agg[mode] = (
            float(np.mean(ps)),
            float(np.mean(fe)),
            float(np.std(fe, ddof=1) / math.sqrt(k)) if k > 1
            else float(math.sqrt(fe_var[0])),
        )
    rows = [(p["lambda"], agg["free"][0], agg["plus"][0],
             agg["free"][1], agg["free"][2], agg["plus"][1], agg["plus"][2])]
    _write_csv(
        out, cfg, {},
        ["lambda", "psucc_fr", "psucc_pl", "psi_fr", "psi_fr_se", "psi_pl", "psi_pl_se"],
        rows,
    )
    return files


def _run_phase_diagram(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    bracket = None
    if p["lambda_min"] is not None:
        bracket = (p["lambda_min"], p["lambda_max"])
    rows = []
    for kappa in p["kappa"]:
        pb = phase_boundaries(kappa, lambda_bracket=bracket, tol=p["tol"])
        rows.append((kappa, pb.lambda_sp, pb.lambda_s, pb.lambda_d))
    _write_csv(out, cfg, {}, ["kappa", "lambda_sp", "lambda_s", "lambda_d"], rows)
    return [out]


def _run_mu_profile(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    psi0 = psi_mu(0.0, p["lambda"], p["kappa"])
    rows = [(mu, psi_mu(mu, p["lambda"], p["kappa"]) - psi0) for mu in p["mu"]]
    _write_csv(out, cfg, {"psi_at_zero": psi0}, ["mu", "psi_minus_psi0"], rows)
    return [out]


def _run_exhaustive(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    params = params_from_snr(p["kappa"], p["b"], p["lambda"], p["n"])
    k = p["k"] if p["k"] is not None else int(math.floor(p["kappa"] * p["n"]))
    if math.comb(p["n"], k) > 10**8:
        raise GuardError("instance too large: C(n, k) exceeds the subset guard")
    header = ["seed", "edges_best", "edges_planted", "overlap", "ties", "psucc_ex"]
    if p["bp_t"] is not None:
        header.append("psucc_bp")
    rows = []
    for si in range(p["seeds"]):
        seed = int(task_rng(p["master_seed"], 4, si).integers(0, 2**63))
        graph = sample_graph(params, seed, fixed_size=True)
        res = exhaustive_search(graph, k)
        planted = count_edges_within(graph, graph.membership)
        estimate = np.zeros(p["n"], dtype=bool)
        estimate[res.best_set] = True
        row = [si, res.best_edge_count, planted, res.overlap, res.ties,
               empirical_psucc(estimate, graph.membership)]
        if p["bp_t"] is not None:
            _, bp_est, _ = run_bp(graph, params, p["bp_t"], "free", p["threshold_rule"])
            row.append(empirical_psucc(bp_est, graph.membership))
        rows.append(tuple(row))
    _write_csv(out, cfg, {"k": k}, header, rows)
    return [out]


def _run_verify_bounds(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    rows = []
    for li, lam in enumerate(p["lambda"]):
        params = params_for_population(p["kappa"], p["b"], lam)
        rng = task_rng(p["master_seed"], 5, li)
        run = run_pd(params, p["M"], p["T"], "free", rng,
                     reweight=p["reweight"], track_psucc=True)
        xs = x_star(lam)
        ceiling = (xs - 1.0) / 4.0
        se = pd_psucc_stderr(run.population, p["kappa"])
        observed = float(np.max(run.psucc))
        rows.append(
            (lam, xs, ceiling, observed, se,
             observed <= ceiling + 4.0 * se)
        )
    _write_csv(
        out, cfg, {"global_ceiling": (math.e - 1.0) / 4.0},
        ["lambda", "x_star", "ceiling", "psucc_fr_max", "psucc_se", "within_bound"],
        rows,
    )
    return [out]


def _run_gaussian_check(cfg, out: Path, threads: int) -> list[Path]:
    p = cfg.params
    rows = gaussian_limit_check(
        p["kappa"], p["lambda"], p["b"], p["t"], p["M"], seed=p["master_seed"]
    )
    _write_csv(
        out, cfg, {},
        ["t", "mu", "mean0", "mean1", "var0", "var1",
         "rel_mean0", "rel_mean1", "rel_var0", "rel_var1"],
        [(r.t, r.mu, r.mean0, r.mean1, r.var0, r.var1,
          r.rel_mean0, r.rel_mean1, r.rel_var0, r.rel_var1) for r in rows],
    )
    return [out]


_RUNNERS = {
    "generate": _run_generate,
    "bp-run": _run_bp_run,
    "pd-curve": _run_pd_curve,
    "free-energy": _run_free_energy,
    "phase-diagram": _run_phase_diagram,
    "mu-profile": _run_mu_profile,
    "exhaustive": _run_exhaustive,
    "verify-bounds": _run_verify_bounds,
    "gaussian-check": _run_gaussian_check,
}


def run(
    cfg: ExperimentConfig,
    out_dir: str | Path = ".",
    threads: int = 1,
    force: bool = False,
    cache_dir: str | Path | None = None,
) -> list[Path]:
    """Execute one experiment; returns the written file paths.

    Results are cached under a content hash of the configuration (plus
    artifact version and backend); a hit restores the exact bytes instead
    of recomputing.  HCLAB_CACHE_DIR overrides the cache location.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = Path(cfg.out_path)
    if not out.is_absolute():
        out = out_dir / out

    if cache_dir is None:
        cache_dir = os.environ.get("HCLAB_CACHE_DIR") or (out_dir / ".hclab-cache")
    cache_slot = Path(cache_dir) / cache_key(cfg)

    if cache_slot.is_dir() and not force:
        files = []
        for src in sorted(cache_slot.iterdir()):
            dst = out.parent / src.name
            shutil.copyfile(src, dst)
            files.append(dst)
        if files:
            return files

    out.parent.mkdir(parents=True, exist_ok=True)
    files = _RUNNERS[cfg.experiment](cfg, out, threads)

    cache_slot.mkdir(parents=True, exist_ok=True)
    for f in files:
        shutil.copyfile(f, cache_slot / Path(f).name)
    return files
