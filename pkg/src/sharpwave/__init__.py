"""Sharp traveling waves of 1-D porous media equations in periodic media."""

from sharpwave.model import (
    Environment,
    Field,
    HarmonicFunction,
    PiecewisePoly,
    ReactionSpec,
    density_from_pressure,
    lipschitz_bound,
    pressure_from_density,
    reaction_density,
    reaction_pressure,
    validate_F1,
)

__version__ = "0.1.0"

__all__ = [
    "Environment",
    "Field",
    "HarmonicFunction",
    "PiecewisePoly",
    "ReactionSpec",
    "density_from_pressure",
    "lipschitz_bound",
    "pressure_from_density",
    "reaction_density",
    "reaction_pressure",
    "validate_F1",
    "__version__",
]
