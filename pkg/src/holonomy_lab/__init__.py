"""Holonomy, primitive trace maps and Parry-monoid numerics on hyperbolic surfaces."""

from .bundle import Connection, GaugeElement, UnitaryRep, direct_sum, gauge_transform, mixed_connection
from .classes import ConjClass, canonical_class, class_geodesic, enumerate_primitive_classes
from .hyperbolic import Geodesic, MobiusElement, SurfaceGroup, build_surface, genus2_group, schottky_group
from .parry import ReferenceOrbit, homoclinic_geodesic, parry_generator, solve_intertwiner, spiral_limit
from .tracemap import TraceSequence, compare_trace_maps, primitive_trace_map, recover_line_characters
from .transport import holonomy_class, transport_geodesic

__version__ = "0.1.0"

__all__ = [
    "ConjClass",
    "Connection",
    "GaugeElement",
    "Geodesic",
    "MobiusElement",
    "ReferenceOrbit",
    "SurfaceGroup",
    "TraceSequence",
    "UnitaryRep",
    "build_surface",
    "canonical_class",
    "class_geodesic",
    "compare_trace_maps",
    "direct_sum",
    "enumerate_primitive_classes",
    "gauge_transform",
    "genus2_group",
    "holonomy_class",
    "homoclinic_geodesic",
    "mixed_connection",
    "parry_generator",
    "primitive_trace_map",
    "recover_line_characters",
    "schottky_group",
    "solve_intertwiner",
    "spiral_limit",
    "transport_geodesic",
]
