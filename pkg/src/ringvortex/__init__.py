"""Vector field, 3D polarization and topology of a phased circular array of dipole emitters."""

from .array_field import (
    COMPONENTS,
    EVALUATORS,
    ArrayConfig,
    FieldAmplitudes,
    ObservationPoint,
    TruncationPolicy,
    continuous_limit,
    electric_field,
    emitter_positions,
    exact_dipole_sum,
    farfield_dipole_sum,
    flux_density,
    jacobi_anger_series,
    make_sampler,
    ring_normalization,
)
from .errors import (
    ConfigError,
    DomainError,
    SingularityError,
    UndefinedPolarizationError,
    UnsupportedCaseError,
    WindingResolutionError,
)
from .polarization import (
    PolarizationState,
    analytic_small_angle,
    density_matrix,
    polarization_params,
    reconstruct_density,
)
from .scan import ScanConfig, field_map, load_config, radial_profile
from .specfun import bessel_j, wigner_d1
from .topology import (
    ChargeReport,
    GridSpec,
    SingularityRecord,
    leading_charges,
    min_atoms,
    singularity_scan,
    winding_number,
)

__version__ = "0.1.0"
