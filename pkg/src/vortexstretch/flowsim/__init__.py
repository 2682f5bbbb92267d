"""Lagrangian machinery: streamlines, arc length, flow maps, disk probes."""

from .lagrangian import (
    ArcLengthMap,
    DiskProbeResult,
    FlowMapState,
    IntegratorConfig,
    Streamline,
    arc_length_map,
    cauchy_vorticity,
    disk_basis,
    disk_probe,
    flow_map,
    flow_map_jacobian,
    integrate_streamline,
)
from .rk import IntegratorStats, Solution, dopri5

__all__ = [
    "ArcLengthMap",
    "DiskProbeResult",
    "FlowMapState",
    "IntegratorConfig",
    "IntegratorStats",
    "Solution",
    "Streamline",
    "arc_length_map",
    "cauchy_vorticity",
    "disk_basis",
    "disk_probe",
    "dopri5",
    "flow_map",
    "flow_map_jacobian",
    "integrate_streamline",
]
