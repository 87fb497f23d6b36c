"""cavityduo: two dissipative cavity modes sharing a zero-temperature reservoir.

Library layout:

- ``coefficients``: normal modes, spectral quadrature, the eight
  laboratory-frame constants, physicality screen.
- ``propagator``: closed-form constants c, r, R, transfer functions f/l and
  the twelve ordered factorization exponents.
- ``states``: exact coherent-pair and cat-state evolution, weak-coupling
  rates, linear entropy.
- ``lindblad``: brute-force RK4 integrator on a truncated Fock space and the
  superoperator commutator verifier (the independent oracle).
- ``harness``: config parsing, scenario runners, CSV emission.
"""

from .coefficients import (
    EffectiveDetunings,
    LabCoefficients,
    ModelParams,
    NormalModeData,
    ReservoirSpectrum,
    coefficients_from_spectrum,
    effective_detunings,
    gamma_matrix,
    normal_modes,
    physicality_screen,
    xi,
)
from .errors import (
    CavityDuoError,
    CutoffTooSmall,
    DegenerateCat,
    FactorizationSingular,
    GridTooCoarse,
    NegativeDiagonalRate,
    ParseError,
    PhysicalityWarning,
    PositivityViolation,
    StepTooLarge,
    TableMismatch,
    ValidationError,
    WeakCouplingInvalid,
)
from .lindblad import (
    DensityMatrix,
    Diagnostics,
    EvolutionResult,
    LiouvillianSpec,
    apply_factored_propagator,
    apply_liouvillian,
    build_cat,
    build_coherent,
    diagnostics,
    evolve,
    export_density_matrix,
    verify_commutator_table,
)
from .propagator import (
    AuxFunctions,
    FactorizationExponents,
    PropagatorConstants,
    aux_functions,
    constants,
    factor_exponents,
)
from .states import (
    CatComponents,
    CatState,
    CoherentPair,
    EntropyPoint,
    cat_components,
    cat_density_matrix,
    coherence_preservation_residual,
    coherent_overlap,
    evolve_coherent_pair,
    evolve_coherent_weak,
    linear_entropy,
    weak_coupling_rates,
)

__version__ = "0.1.0"
