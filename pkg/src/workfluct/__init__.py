"""Quantum work-measurement schemes and the corrected Jarzynski equality."""

from .linalg import (
    Spectrum,
    as_density,
    as_hermitian,
    as_unitary,
    eig_hermitian,
    func_hermitian,
    relative_entropy,
    schatten_inf_norm,
)
from .process import (
    Process,
    char_energy_scale,
    dephased_how,
    how_operator,
    load_process,
    perturb_how,
    perturbed_process,
    save_process,
    thermal_quantities,
)
from .scheme import (
    MeasurementScheme,
    Outcome,
    WorkDistribution,
    cdf,
    first_moment_operator,
    golden_thompson_correction,
    how_scheme,
    is_energy_conserving,
    jarzynski_average,
    load_scheme,
    log_jarzynski_average,
    log_moment_operator,
    outlier_lower_bound,
    save_scheme,
    second_law_cdf_bound,
    tpm_scheme,
    validate_scheme,
    work_distribution,
    xi_correction,
    xi_how_bound,
)
from .modified import (
    EpsVParameters,
    LambdaSystem,
    circuit1_scheme,
    circuit2_scheme,
    lambda_system,
    tpm_eps_v_scheme,
)
from .circuits import (
    CircuitRealization,
    KrausInstrument,
    KrausOp,
    WorkSamples,
    build_circuit1,
    build_circuit2,
    build_circuit_epsv,
    estimate_observables,
    induced_povm,
    sample_trajectories,
)
from .optimize import InfeasibleSchemeError, minimize_xi, project_feasible
from .dissipation import (
    DissipationPair,
    cdf_crossing,
    dissipation_pair,
    erfc_accurate,
    erfcx_scaled,
    solve_b,
    verify_ibp_identities,
    xi_of_a,
)
from .qubit import (
    CoherentState,
    QubitExample,
    coherent_histogram,
    example_process,
    fig2_sweep,
    lambda_closed_form,
)

__version__ = "0.1.0"
