"""Publication-style figures from sharpwave run artifacts.

Reads only the documented CSV/JSON files of a run directory (profile,
boundary, trajectory, summary) and renders the four standard figure
kinds; nothing here ever writes into a run directory.
"""

from sharpwave_plot.figures import FigureSpec, MissingArtifact, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "MissingArtifact", "render", "__version__"]
