"""sml: a numerical laboratory for lattice-sphere maximal averages.

Library layout mirrors the mathematical layers:

* numtheory -- lcm towers, non-divisor classification, tail sums, parameter
  selection
* lattice   -- exact sphere enumeration and representation counts
* signals   -- sparse/periodic signal containers and the physical-side
  operators (sphere averages, dyadic maxima, box maximal operator,
  telescoping decomposition)
* spectral  -- torus-side multipliers, frequency regions, theta sums
* circle    -- Farey dissection, Gauss sums, arc-local theta evaluation and
  the stratified arc-integral estimate
* acceptance / expcli -- the verification suites and the `sml` command line
"""

from .errors import ParameterError, ResourceError
from .numtheory import (
    LcmTower,
    NondivisorWitness,
    classify_nondivisor,
    lcm_range,
    q_of_depth,
    select_params,
    tail_sum,
)
from .lattice import SphereShell, count_reps, enumerate_sphere, shell_to_csv
from .signals import (
    DecompositionReport,
    PeriodicSignal,
    SparseSignal,
    dyadic_max,
    dyadic_max_at,
    hl_max,
    spherical_average,
    star_max,
    telescope_decompose,
)
from .spectral import (
    FreqRegion,
    ThetaParams,
    TorusPoint,
    avg_multiplier,
    bump_eval,
    delta_multiplier,
    fourier_eval,
    omega_member,
    ortho_partial_sum,
    s_hat,
    sampling_multiplier,
    theta_1d,
)
from .circle import (
    FareyArc,
    SamplingPlan,
    StBoundReport,
    arc_of,
    farey_arcs,
    gauss_sum,
    locate,
    st_rhs_bound,
    stbound_ratio,
)

__version__ = "0.1.0"
