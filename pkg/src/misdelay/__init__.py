"""Multi-input switching delay models for NOR and Muller C gates.

Closed-form gate delay families with input-separation dependence,
trajectory-level oracles, parameter characterization from measured
delays, and an event-driven gate-level simulator.
"""

from misdelay.characterize import (
    InvalidMeasurementsError,
    MeasuredDelays,
    characterize_cgate,
    characterize_nor,
)
from misdelay.fileio import (
    SchemaError,
    list_fixtures,
    load_fixture,
    parse_measured,
    parse_netlist,
    parse_params,
    serialize_measured,
    serialize_netlist,
    serialize_params,
)
from misdelay.gates import (
    CGateParams,
    DelayQuery,
    NorGateParams,
    ParamError,
    cgate_breakpoints,
    cgate_delay,
    nor_breakpoints,
    nor_delay,
)
from misdelay.sim import (
    CausalityError,
    Gate,
    Netlist,
    NetlistError,
    SimResult,
    StimulusSpec,
    build_cross_coupled_chain,
    generate_stimulus,
    run,
)
from misdelay.trajectories import delay_by_inversion, delay_by_ode

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ParamError",
    "NorGateParams",
    "CGateParams",
    "DelayQuery",
    "nor_delay",
    "nor_breakpoints",
    "cgate_delay",
    "cgate_breakpoints",
    "delay_by_inversion",
    "delay_by_ode",
    "InvalidMeasurementsError",
    "MeasuredDelays",
    "characterize_nor",
    "characterize_cgate",
    "NetlistError",
    "CausalityError",
    "Gate",
    "Netlist",
    "StimulusSpec",
    "SimResult",
    "generate_stimulus",
    "build_cross_coupled_chain",
    "run",
    "SchemaError",
    "parse_params",
    "serialize_params",
    "parse_measured",
    "serialize_measured",
    "parse_netlist",
    "serialize_netlist",
    "load_fixture",
    "list_fixtures",
]
