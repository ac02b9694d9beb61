"""voidtherm: simulation and verification laboratory for spatial energy
decay in porous thermoelastic media with anti-dissipative thermal coupling."""

from .material import (
    DecayParameters,
    FeasibilityWindow,
    InfeasibleWindow,
    Material,
    MaterialFileError,
    NoFeasibleLambda,
    NotPositiveDefinite,
    Spectrum,
    ValidationReport,
    assemble_quadratic_form,
    epsilon_of_lambda,
    epsilon_residual,
    feasibility_window,
    optimize_lambda,
    random_material,
    read_material_file,
    spectrum,
    validate,
    write_material_file,
    zeta_of_lambda,
)
from .constitutive import (
    GeneralizedStress,
    KinematicVector,
    NonPositiveEpsilon,
    PointState,
    ResponseState,
    TOLERANCES,
    TolerancePolicy,
    bilinear_form,
    check_flux_bound,
    check_stress_bound,
    check_surface_power_bound,
    generalized_response,
    random_kinematic,
    random_point_state,
    response,
    stored_energy,
)
from .solver import (
    BoundaryCondition,
    BoundaryPartition,
    BudgetExceeded,
    CflViolation,
    CosineBump,
    FieldData,
    Grid,
    NonFiniteField,
    RaisedCosinePulse,
    Scenario,
    ScenarioFileError,
    SimState,
    Trajectory,
    WindowedGaussianPulse,
    ZeroSignal,
    kinematics,
    pde_residual,
    read_scenario_file,
    reverse_time,
    run,
    run_dissipative,
    stability_budget,
    step,
    validate_scenario,
    write_trajectory_csv,
)
from .mms import manufactured_scenario, static_equilibrium_scenario
from .measures import (
    DecayReport,
    DiffInequalityReport,
    EnergyIdentityReport,
    MeasureSeries,
    SupportGeometry,
    check_decay,
    check_diff_inequality,
    check_energy_identity,
    compute_measure,
    support_geometry,
    surface_power,
    weighted_energy_density,
    write_measure_csv,
)

__version__ = "0.1.0"
