"""Figure rendering for qosched simulation CSV outputs."""

from .render import render
from .schema import SchemaError

__version__ = "0.1.0"
