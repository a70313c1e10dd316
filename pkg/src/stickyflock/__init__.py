"""Entropy solutions of the 1D Euler-alignment system by sticky Cucker-Smale particles."""

from .balance_law import (
    ShockRecord,
    oleinik_margin,
    rankine_hugoniot_residual,
    reconstruct_fields,
    reconstruct_M,
    reconstruct_Q,
    verify_state,
    verify_trace,
)
from .diagnostics import (
    FlockingReport,
    RateTable,
    convergence_study,
    flocking_report,
    stability_study,
    strong_flocking_gap,
)
from .dynamics import (
    ClusterState,
    CollisionEvent,
    SimulationTrace,
    direct_cs_reference,
    locate_collision,
    merge,
    simulate,
    step,
    velocity_from_psi,
)
from .initial_data import (
    InitialData,
    InitialDensity,
    PiecewiseLinearFlux,
    Velocity,
    build_flux,
    discretize_density,
    discretize_flux,
    initial_velocities,
    prepare_particles,
)
from .kernels import (
    CommunicationKernel,
    flocking_threshold_holds,
    phi,
    phi_primitive,
    phi_primitive_inverse,
)
from .measures import DiscreteMeasure, StepCDF, cdf, conv_phi_M, generalized_inverse, wasserstein1

__version__ = "0.1.0"
