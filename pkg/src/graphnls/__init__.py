"""Ground states of the nonlinear Schroedinger equation on metric graphs.

P1 finite elements with lumped mass, preconditioned Riemannian descent for
energy minimizers at fixed mass and action minimizers at fixed frequency,
branch tracing, and detection of masses carrying two ground-state multipliers.
"""

from .action import ActionMultistart, ActionRecord, minimize_action, multistart_action, scaling_transport
from .baselines import MU_R, MU_RPLUS, constants_table, critical_mass, soliton, soliton_p
from .config import SolverConfig
from .energy import (
    RESOLUTION_LIMIT,
    EnergyMultistart,
    GroundStateRecord,
    UnboundedBelowError,
    minimize_energy,
    multistart_energy,
)
from .functionals import action, energy, lagrange_lambda, nehari_project
from .graph import NAMED_GRAPHS, Edge, GraphError, MetricGraph, build_named, scale
from .io import RunManifest, graph_from_dict, graph_to_dict, load_graph_json, save_graph_json, tool_version
from .mesh import GraphFunction, Mesh, build_mesh
from .rearrange import monotone_rearrangement, polya_szego_check, symmetric_rearrangement
from .sweep import (
    BranchTable,
    InversionWitness,
    ZPointWitness,
    derivative_consistency,
    find_inversion,
    find_z_points,
    stable_inversion,
    trace_action_branch,
    trace_energy_branch,
    z_point_refined,
)

__version__ = tool_version()

__all__ = [name for name in dir() if not name.startswith("_")]
