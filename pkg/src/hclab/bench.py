"""Benchmark the compiled kernels against the NumPy fallbacks.

Run as ``python -m hclab.bench`` (add ``--quick`` for smaller sizes).
Reports per-call times for the three hot kernels and one full
population-dynamics step, plus the maximum relative disagreement between
the two implementations on identical inputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _backend


def _time(fn, *args, repeats=5):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeats, out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args(argv)

    try:
        from . import _fastcore
    except ImportError:
        _fastcore = None

    scale = 0.2 if args.quick else 1.0
    rng = np.random.default_rng(0)
    M = int(10_000 * scale) + 100
    deg = 100.0
    xi = rng.normal(-5.0, 2.0, M)
    counts = rng.poisson(deg, M).astype(np.int64)
    idx = rng.integers(0, M, int(counts.sum()), dtype=np.int64)

    n = int(100_000 * scale) + 1000
    E = int(n * deg / 2)
    u = rng.integers(0, n, E, dtype=np.int64)
    v = (u + 1 + rng.integers(0, n - 1, E, dtype=np.int64)) % n
    tail = np.empty(2 * E, dtype=np.int64)
    head = np.empty(2 * E, dtype=np.int64)
    tail[0::2], head[0::2] = u, v
    tail[1::2], head[1::2] = v, u
    msg = rng.normal(-5.0, 2.0, 2 * E)

    cases = [
        ("f_values (M msgs)", (_backend.f_values_pure, (msg, 11.9)),
         None if _fastcore is None else (_fastcore.f_values, (msg, 11.9))),
        ("gather_segment_sum", (_backend.gather_segment_sum_pure, (xi, idx, counts)),
         None if _fastcore is None else (_fastcore.gather_segment_sum, (xi, idx, counts))),
        ("bp_pass", (_backend.bp_pass_pure, (msg, tail, head, n, 11.9, -5.3)),
         None if _fastcore is None else (_fastcore.bp_pass, (msg, tail, head, n, 11.9, -5.3))),
    ]

    print(f"active backend: {_backend.BACKEND}")
    print(f"{'kernel':<24} {'pure':>10} {'compiled':>10} {'speedup':>8} {'max rel diff':>14}")
    for name, (pfn, pargs), fast in cases:
        tp, pout = _time(pfn, *pargs)
        if fast is None:
            print(f"{name:<24} {tp * 1e3:>8.2f}ms {'n/a':>10} {'':>8} {'':>14}")
            continue
        tf, fout = _time(fast[0], *fast[1])
        rel = float(np.max(np.abs(pout - fout) / (1.0 + np.abs(pout))))
        print(f"{name:<24} {tp * 1e3:>8.2f}ms {tf * 1e3:>8.2f}ms {tp / tf:>7.2f}x {rel:>14.2e}")

    # one full population-dynamics step under each backend
    from .model import params_for_population
    from .population import pd_init, pd_step

    params = params_for_population(0.005, 100.0, 0.3)
    for label, force in (("pure", True), (_backend.BACKEND, False)):
        if force:
            saved = (_backend.f_values, _backend.gather_segment_sum)
            _backend.f_values = _backend.f_values_pure
            _backend.gather_segment_sum = _backend.gather_segment_sum_pure
        pop = pd_init(params, max(M, 1000), "free", 0)
        t, _ = _time(pd_step, pop, params, np.random.default_rng(1), True)
        print(f"pd_step [{label:>8}]        {t * 1e3:>8.2f}ms")
        if force:
            _backend.f_values, _backend.gather_segment_sum = saved
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
