"""Rendering of mppgeo trajectory/sample exports into figures."""

from .render import RenderResult, render
from .spec import FigureSpec, SchemaMismatch

__version__ = "0.1.0"
