"""dmzkit: exact tools for involutive linear systems, their gauge orbits,
resonant wave interactions, orthogonal webs, and semi-Hamiltonian
hydrodynamic flows."""

from dmzkit import cli, dmz, expr, gauge, geometry, hydro, jets, systemfile, waves
from dmzkit.dmz import (
    ConstructionResult,
    DmzError,
    DmzSystem,
    GdmzSystem,
    InvolutivityReport,
    LamePotentials,
    Residual,
    construct_gdmz,
    dmz_to_gdmz,
    gdmz_compatibility_residuals,
    gdmz_formal_obstructions,
    gdmz_to_dmz,
    integrability_residuals,
    is_involutive,
    lame_potentials,
    residual_operator_apply,
    verify_lame,
    zero_verdict,
)
from dmzkit.expr import (
    Expr,
    ExprError,
    ExprSyntaxError,
    IndeterminateError,
    Interval,
    NonElementaryAntiderivative,
    NonRationalIntegrand,
    PoleError,
    ProbablyNonzero,
    ProbablyZero,
    ProvablyNonzero,
    ProvablyZero,
    antiderivative,
    diff,
    eval_at,
    is_zero,
    parse,
    render,
    substitute,
)
from dmzkit.gauge import (
    GaugeError,
    gauge_invariants,
    gauge_transform,
    to_m3wri_gauge,
    to_threewave_gauge,
)
from dmzkit.geometry import (
    Chart,
    Distribution,
    GeometryError,
    HyperbolicReport,
    VectorField,
    cauchy_characteristic,
    check_n_hyperbolic,
    derived_flag,
    derived_type,
    lie_bracket,
    verify_invariants,
)
from dmzkit.hydro import (
    DegeneracyWarning,
    FlowField,
    HodographResult,
    HydroError,
    HydroSystem,
    chromatography,
    commuting_flow_residuals,
    connection_from_dmz,
    conserved_density_residuals,
    diagonal_connection,
    grid_pde_residual,
    hodograph_grid,
    hodograph_solve,
    hydro_from_dmz,
    induced_dmz,
    is_semihamiltonian,
    semihamiltonian_residuals,
    three_component_semi,
)
from dmzkit.jets import (
    JetFactor,
    JetProduct,
    JetsError,
    QuotientAssembly,
    SymbolicMap,
    assemble_quotient_H,
    contact_basis,
    identity_map,
    prolong,
    pushforward,
    total_derivative_field,
)
from dmzkit.systemfile import SystemFile, SystemFileError, load, render_dmz, render_gdmz
from dmzkit.waves import (
    WaveMatrix,
    full_lame_residuals,
    half_lame_residuals,
    linear_problem_residuals,
    m3wri_linear_problem_residuals,
    m3wri_residuals,
    nwave_residuals,
    sergeev_constraint_residuals,
    wave_from_lame,
    wave_matrix_from_dmz,
)

__version__ = "0.1.0"
