"""Figure rendering for decent experiment CSV tables."""

from .render import KINDS, FigureSpec, PlotInputError, render

__version__ = "0.1.0"

__all__ = ["KINDS", "FigureSpec", "PlotInputError", "render"]
