"""Many-server N-system under FCFS-ALIS: exact, asymptotic and simulated steady state."""

from .model import DerivedRatios, Shape, SystemParams, derive, load_params, scale, stability

__all__ = ["DerivedRatios", "Shape", "SystemParams", "derive", "load_params", "scale", "stability"]
