"""Numerical dynamics of a two-stage, third-order Newton-type iteration.

The library isolates roots and critical points of smooth functions, iterates
the damped one- and two-stage Newton maps, builds numerically certified
covering bands, constructs periodic points of any prime period and
divergence witnesses from band itineraries, and verifies invariance of the
dynamics under affine conjugation.
"""

from .functions import (
    CriticalStructure,
    Interval,
    NewtonClassReport,
    SmoothFunction,
    critical_structure,
    find_critical_points,
    find_roots,
    make_closed_form,
    make_polynomial,
    verify_newton_class,
)
from .iteration import (
    ConvergedToRoot,
    DerivativeBlowup,
    DerivativeBlowupError,
    Escaped,
    EstimationError,
    MapKind,
    MapVariant,
    MaxIter,
    OrbitRecord,
    PeriodicSuspect,
    estimate_order,
    iterate,
    map_callable,
    newton_map,
    step,
    step_newton,
    step_third_order,
    third_order_map,
)
from .bands import (
    BandSystem,
    BandError,
    EdgeLimits,
    HypothesesError,
    HypothesesReport,
    build_bands,
    check_hypotheses,
    limits_at_band_edges,
)
from .symbolic import (
    CertificationError,
    DivergenceWitness,
    Itinerary,
    ItineraryKind,
    PeriodicCertificate,
    PullbackError,
    RefinementChain,
    RefinementError,
    alternating_pattern,
    divergence_witness,
    enumerate_prime_seeds,
    find_periodic,
    pullback,
    refine_itinerary,
)
from .conjugacy import (
    AffineMap,
    ScalingReport,
    conjugate_function,
    scaling_samples,
    verify_scaling_newton,
    verify_scaling_third_order,
)
from .sweep import DampingRow, SweepRow, SweepSpec, damping_robustness, run_sweep, write_csv

__version__ = "0.1.0"
