"""Spectral-Galerkin solvers for nonlinear diffusion, damped waves, and
fractional anomalous diffusion with Gaussian random initial data."""

from .basis import (
    BasisSpec,
    Grid,
    GridTransform,
    PhysicalField,
    SpectralBasis,
    SpectralField,
    apply_spectral_multiplier,
    build_basis,
    inner_product,
    poincare_constant,
    project,
    synthesize,
    unit_field,
)
from .ensemble import (
    CharacteristicProbe,
    Ensemble,
    KernelSpec,
    MomentReport,
    ensemble_moment_report,
    estimate_characteristic_functional,
    estimate_two_point,
    kernel_spectral_coeffs,
    random_probes,
    run_ensemble,
    sample_initial_condition,
    sample_lognormal_potential,
    trace_of_kernel,
)
from .errors import (
    ConfigurationError,
    DivergentIntegralError,
    EnsembleError,
    GridMismatchError,
    InstabilityError,
    InsufficientDataError,
    IntegrationError,
    KernelError,
    LinearAlgebraError,
    NotApplicableError,
    NotTraceClassError,
    NumericError,
    PoleError,
    SpecgalError,
)
from .anomalous import (
    DampedWaveProblem,
    FractionalOperatorSpec,
    KatoRellichReport,
    damped_wave_propagate,
    evolve_fractional,
    free_propagator,
    kato_rellich_constant,
    kato_rellich_report,
    relative_bound,
)
from .hyperbolic import (
    HyperbolicProblem,
    WaveEnergyReport,
    WaveState,
    WaveTrajectory,
    assemble_wave_rhs,
    integrate_wave,
    velocity_consistency,
    wave_energy_audit,
)
from .integrate import StepControl
from .nonlinearity import (
    NonlinearityProfile,
    PorousMediumParams,
    make_exponential_profile,
    make_linear_profile,
    make_regularized_power_profile,
)
from .parabolic import (
    EnergyReport,
    ParabolicProblem,
    TrajectorySample,
    assemble_parabolic_rhs,
    energy_audit,
    gronwall_bound,
    initial_condition_recovery,
    integrate_parabolic,
    lipschitz_stability,
)

__version__ = "0.1.0"
