"""Hidden dense-subgraph detection on sparse random graphs.

Library layout:

* :mod:`hclab.kernel` -- scalar message function, thresholds, entropy.
* :mod:`hclab.model` -- parameters, planted-graph sampling, success metric.
* :mod:`hclab.bp` -- belief propagation on a sampled graph.
* :mod:`hclab.population` -- population-dynamics solver and free energy.
* :mod:`hclab.largedeg` -- large-degree scalar theory and phase diagram.
* :mod:`hclab.oracles` -- exhaustive search and exact enumeration.
* :mod:`hclab.cli` -- the ``hclab`` experiment runner.

The hot kernels run on a compiled extension when available; see
:mod:`hclab._backend` and ``python -m hclab.bench``.
"""

from ._backend import BACKEND as backend_name
from .bp import MessageState, bp_fields, bp_init, bp_step, classify, run_bp
from .kernel import KernelParams, binary_entropy, f_message, field_h, log_odds_threshold, x_star
from .largedeg import (
    F,
    MuFixedPoints,
    PhaseBoundaries,
    critical_point,
    fixed_points,
    gaussian_limit_check,
    mu_iterate,
    mu_sequence,
    mubar_recursion,
    phase_boundaries,
    psi_mu,
    psucc_largedeg,
)
from .model import (
    ModelParams,
    PlantedGraph,
    count_edges_within,
    empirical_psucc,
    params_for_population,
    params_from_snr,
    read_graph,
    sample_graph,
    snr,
    write_graph,
)
from .oracles import (
    ExhaustiveResult,
    exact_local_marginals,
    exact_posterior_marginals,
    exhaustive_search,
    prop1_bound,
    prop1_bound_infinite_degree,
)
from .population import (
    CavityCurvePoint,
    Population,
    bethe_free_energy,
    estimate_lambda_s,
    nishimori_diagnostics,
    pd_curve,
    pd_init,
    pd_psucc,
    pd_step,
    read_population_file,
    run_pd,
    write_population_file,
)

__version__ = "0.1.0"
