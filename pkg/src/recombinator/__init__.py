"""Simulation and analysis workbench for the nonlinear recombination model:
exact and stochastic solvers for dp/dt = Q(p) - p, the N-particle
generalized random transposition process, and exact entropy / transport /
functional-inequality diagnostics."""

from ._kernels import BACKEND as kernel_backend
from .analysis import (
    TransportPlan,
    ent,
    fisher_nonlinear,
    rel_entropy,
    tv,
    wasserstein,
    wasserstein_plan,
)
from .gas import (
    AdmissibleDensity,
    CollisionEvent,
    ParticleState,
    apply_collision,
    empirical,
    empirical_k,
    rho_pi,
    sample_canonical,
    sample_canonical_codes,
    simulate,
)
from .lclt import (
    InducedMeasure,
    LatticeDP,
    dp_point_prob,
    entropic_chaos,
    exact_k_marginal,
    fisher_particle,
    gaussian_approx,
    induce,
    irreducible,
    sector_log_prob,
)
from .mckean import (
    MarkedTree,
    McKeanTree,
    fragment,
    omega_statistic,
    sample_pt,
    sample_pt_histogram,
    sample_pt_many,
    sample_tree,
)
from .solver import (
    SolveTrace,
    WildExpansion,
    evolve,
    linearized_evolve,
    qhat,
    wild_sum,
    wild_term,
)
from .space import (
    Distribution,
    RecombinationMeasure,
    SpaceShape,
    builtin_nu,
    collision_kernel,
    complement,
    convolve,
    full_mask,
    marginal,
    tensor,
)

__version__ = "0.1.0"
