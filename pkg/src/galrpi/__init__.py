"""Galilei group algebra, corridor path weights and decohering split-step propagation."""
from .algebra import GalileiElement, PhysicsParams, Rotation, SpacetimePoint, act, compose, inverse, multiplicator
from .evolution import (
    Scenario,
    accumulate_density_exact,
    accumulate_density_mc,
    propagate_corridor,
    propagate_step,
    propagator_matrix,
)
from .models import GaugeModel, MeasurementModel, ObservableSpec
from .paths import Corridor, Path, VelocityRecord
from .states import DensityMatrix, GaussianPacket, Grid, WaveFunction

__version__ = "0.1.0"

__all__ = [
    "Corridor", "DensityMatrix", "GalileiElement", "GaugeModel", "GaussianPacket", "Grid",
    "MeasurementModel", "ObservableSpec", "Path", "PhysicsParams", "Rotation", "Scenario",
    "SpacetimePoint", "VelocityRecord", "WaveFunction", "accumulate_density_exact",
    "accumulate_density_mc", "act", "compose", "inverse", "multiplicator", "propagate_corridor",
    "propagate_step", "propagator_matrix",
]
