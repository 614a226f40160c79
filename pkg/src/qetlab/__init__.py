"""qetlab: a numerical laboratory for quantum energy teleportation with the EM field.

Evaluates the discrete-variable (spin-probe) and continuous-variable
(oscillator-probe) teleportation protocols for the 1+3 dimensional
electromagnetic field end to end: input energy, optimal local operation,
teleported energy, damping factors, energy-density dynamics, and scaling laws,
with every closed-form result cross-checked against independent brute-force
oracles.  Natural units c = hbar = 1 throughout.
"""

__version__ = "0.1.0"

from .errors import (
    CausalityError,
    DegenerateFieldError,
    LightConeError,
    ResolutionError,
    ToleranceFailure,
    ValidationError,
)
from .fields import (
    CurlGaussian,
    GridField,
    GridSpec,
    GridSpectrum,
    RadialWindow,
    check_divergence_free,
    inverse_transform,
    make_curl_gaussian,
    spectral_transform,
    transverse_project,
)
from .spectral import (
    DeltaKernel,
    IntegralResult,
    brute_force_overlap_oracle,
    commutator_residual,
    overlap_kernel,
    pauli_jordan_delta,
    pauli_jordan_delta_quadrature,
    weighted_spectral_integral,
)
from .coherent import (
    CoherentLabel,
    coherent_inner_product,
    displacement_composition_phase,
    mean_electric_field,
)
from .protocols import (
    OscillatorOutcome,
    ProtocolConfig,
    SpinOutcome,
    crossover_amplitude,
    damping_oscillator,
    damping_spin,
    input_energy,
    large_amplitude_limit,
    povm_identity_check,
    run_oscillator_protocol,
    run_spin_protocol,
    separation_scaling_fit,
)
from .dynamics import (
    DensityFrame,
    FrameGrid,
    energy_density_frame,
    residual_window_energy,
    total_energy,
)
from .negative_energy import (
    DiscreteModeSet,
    GaussianPhotonMode,
    PlaneWaveMode,
    fock_matrix_elements,
    optimal_superposition,
    two_photon_matrix_elements,
)
from .scenario import Scenario, parse_scenario
from .results import ResultRecord, emit_records, run_scenario
