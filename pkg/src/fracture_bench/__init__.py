"""Eigenerosion vs phase-field benchmark on the center-crack panel."""

from .analytic import (
    ReferenceEnergies,
    StrainState,
    StressState,
    reference_energies,
    strain_energy_density,
    strain_from_stress,
    stress_at,
    stress_components,
)
from .config import (
    ConfigError,
    MaterialParams,
    ProblemParams,
    StudyConfig,
    check_criticality,
    critical_Gc,
    load_config,
    table1_config,
)
from .eigenerosion import (
    EEParams,
    EEResult,
    inelastic_energy,
    neighborhood_area,
    optimal_epsilon,
    optimal_inelastic_energy,
    richardson_inelastic_energy,
    solve_ee,
)
from .fem import (
    EnergyBreakdown,
    EquilibriumSolver,
    SolverError,
    assemble,
    element_stiffness,
    energies,
    solve_equilibrium,
    traction_loads,
)
from .grid import (
    CrackRegistration,
    Grid,
    build_grid,
    register_crack_ee,
    register_crack_pf,
)
from .phasefield import (
    PFParams,
    PFState,
    alternate_minimize,
    epsilon_sweep,
    optimal_epsilon_pf,
    pf_energy,
    solve_u_given_v,
    solve_v_given_u,
)

__version__ = "0.1.0"
