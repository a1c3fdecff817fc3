"""Bright-state adiabatic passage in a lambda medium with unequal couplings.

Public surface re-exported here: parameter/grid types and entrance
construction (:mod:`bstirap.domain`), single-atom dynamics
(:mod:`bstirap.atom_dynamics`), the coupled field-atom propagation solver
(:mod:`bstirap.propagation`), the closed-form characteristics theory
(:mod:`bstirap.analytic`) and the scenario/CSV layer
(:mod:`bstirap.scenario`).
"""

from .analytic import (
    BreakdownLength,
    CharacteristicsSolution,
    EntranceProfiles,
    TransferCurve,
    ValidityLengths,
    breakdown_length,
    entrance_profiles,
    factor_A,
    p3_adiabatic,
    q_of_theta,
    solve_characteristics,
    solve_xi,
    theta_analytic,
    transfer_curve_and_zmax,
    validity_lengths,
)
from .atom_dynamics import (
    AmplitudeTrajectory,
    DressedFrame,
    adiabaticity_margins,
    dressed_frame,
    hamiltonian,
    integrate_schrodinger,
    mixing_angles,
    projections,
)
from .domain import (
    FieldSlice,
    InputPulseSpec,
    MediumParams,
    PhysicalUnits,
    SimulationGrid,
    gaussian_entrance,
    make_grid,
    physical_units,
)
from .propagation import (
    SimulationRecord,
    Snapshot,
    conservation_residuals,
    diagnostics,
    run,
    step_depth,
)
from .scenario import (
    ScenarioConfig,
    ScenarioResult,
    compare,
    load_preset,
    parse_config,
    run_scenario,
    serialize_config,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeTrajectory",
    "BreakdownLength",
    "CharacteristicsSolution",
    "DressedFrame",
    "EntranceProfiles",
    "FieldSlice",
    "InputPulseSpec",
    "MediumParams",
    "PhysicalUnits",
    "ScenarioConfig",
    "ScenarioResult",
    "SimulationGrid",
    "SimulationRecord",
    "Snapshot",
    "TransferCurve",
    "ValidityLengths",
    "adiabaticity_margins",
    "breakdown_length",
    "compare",
    "conservation_residuals",
    "diagnostics",
    "dressed_frame",
    "entrance_profiles",
    "factor_A",
    "gaussian_entrance",
    "hamiltonian",
    "integrate_schrodinger",
    "load_preset",
    "make_grid",
    "mixing_angles",
    "p3_adiabatic",
    "parse_config",
    "physical_units",
    "projections",
    "q_of_theta",
    "run",
    "run_scenario",
    "serialize_config",
    "solve_characteristics",
    "solve_xi",
    "step_depth",
    "sweep",
    "theta_analytic",
    "transfer_curve_and_zmax",
    "validity_lengths",
]
