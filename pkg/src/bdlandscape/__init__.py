"""Nonsmooth blind deconvolution: population/sample landscapes and Polyak's method."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .linalg import (
    RankTwoRepresentation,
    SignalPair,
    SingularPair,
    TwoByTwoSvd,
    child_rng,
    gaussian_vector,
    make_rng,
    orthonormal_basis_2,
    rank_two_decompose,
    singular_values,
    svd_2x2,
)
from .population import (
    PopulationClass,
    PopulationGradientSV,
    PopulationTag,
    classify_population_point,
    elliptic_e,
    population_gradient_sv,
    population_objective,
    population_series,
    population_subgradient,
    population_value_sv,
)
from .sample import (
    EnsembleRecord,
    MeasurementEnsemble,
    SampleClass,
    SampleFlag,
    classify_sample_point,
    concentration_gap,
    delta_rate,
    generate_measurements,
    sample_subgradient,
    sample_value,
)
from .solver import PolyakConfig, SolveResult, Termination, polyak_step, relative_error, run_polyak
from .experiments import (
    InitKind,
    PhaseCell,
    PhaseGridConfig,
    init_cube,
    init_gaussian,
    landscape_survey,
    monte_carlo_population,
    run_phase_grid,
)
