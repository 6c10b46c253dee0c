"""Multi-lane LWR traffic on a road whose speed laws and lane count jump at x = 0."""

from .grid import Grid
from .model import (
    CustomSpeed,
    DensityDomainError,
    FluxProfile,
    LaneTopology,
    LinearSpeed,
    ModelError,
    Side,
    SideProfiles,
    critical_density,
    eval_flux,
    eval_speed,
    side_of_cell,
)
from .numerics import (
    CFLViolation,
    InterfaceKind,
    godunov_flux,
    source_rate,
    source_step,
    transport_step,
)
from .solver import (
    RunResult,
    Scenario,
    ScenarioError,
    max_lambda,
    project_initial,
    run,
    step,
    velocity_constants,
)

__version__ = "0.1.0"
