"""Discrete-event simulator of PDCP packet duplication over dual connectivity and carrier aggregation."""

from pdcpdup.protocol import (
    BearerConfig,
    BearerKind,
    ConfigurationError,
    DupMode,
    LegConfig,
    PdcpPdu,
    PdcpSdu,
    PdcpTransmitter,
    ReceiverWindow,
)
from pdcpdup.radio import LinkModelConfig, TopologyConfig, pathloss
from pdcpdup.engine import RunConfig, run_campaign, run_iteration

__all__ = [
    "BearerConfig",
    "BearerKind",
    "ConfigurationError",
    "DupMode",
    "LegConfig",
    "LinkModelConfig",
    "PdcpPdu",
    "PdcpSdu",
    "PdcpTransmitter",
    "ReceiverWindow",
    "RunConfig",
    "TopologyConfig",
    "pathloss",
    "run_campaign",
    "run_iteration",
]

__version__ = "0.1.0"
