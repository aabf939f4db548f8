"""Entropy of soft random geometric graphs.

Entropy-per-edge by quadrature and Monte Carlo, its small- and large-range
asymptotes, entropy mass maps, and the log-periodic Cantor-set series.
"""

from .asymptotics import (
    DomainMoments,
    IntegrabilityClass,
    default_moments,
    domain_moments,
    integrability_check,
    integrability_class,
    large_r0,
    rayleigh_mellin_constant,
    small_r0_leading,
    small_r0_second_order,
)
from .cantor import (
    CantorSeries,
    CantorSpec,
    assumption3_check,
    build_cantor_series,
    cantor_entropy_curve,
    cantor_entropy_mc,
    cantor_entropy_series,
    cantor_moment_series,
    cdf_recursion_check,
    mellin_psi,
)
from .connect import (
    Constant,
    FermiDirac,
    Hard,
    PowerLaw,
    Rayleigh,
    binary_entropy,
    evaluate,
    parse_connection,
    rho_scaled,
)
from .entropy import (
    EntropyEstimate,
    Method,
    compressibility_difference,
    conditional_entropy_of_instance,
    entropy_maximizing_r0,
    entropy_per_edge_mc,
    entropy_per_edge_quadrature,
    generate_srgg,
    mean_connection_prob,
)
from .errors import (
    AssumptionError,
    CalibrationError,
    ConvergenceError,
    DegenerateError,
    DivergentError,
    DomainError,
    PoleError,
    UnsupportedError,
)
from .geometry import Domain, DomainKind, empirical_distance_cdf, pair_distance_cdf, pair_distance_density
from .mass import (
    MassMap,
    WedgePoint,
    connectivity_mass,
    entropy_mass,
    mass_map,
    rho_moments,
    wedge_mass_leading,
)

__version__ = "0.1.0"
