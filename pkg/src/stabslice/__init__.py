"""Stabilizer slicing for small subsystem codes under overrotation noise."""

from .circuit import Circuit, Gate, PauliString, from_text, to_text
from .codes import build_lookup_decoder, get_code, prepare_logical_zero
from .noise import DephasingParams, OverrotationParams, bind_noise
from .slicer import (
    SlicingMode,
    build_extraction,
    build_extraction_3body,
    build_extraction_iontrap,
)

__all__ = [
    "Circuit",
    "DephasingParams",
    "Gate",
    "OverrotationParams",
    "PauliString",
    "SlicingMode",
    "bind_noise",
    "build_extraction",
    "build_extraction_3body",
    "build_extraction_iontrap",
    "build_lookup_decoder",
    "from_text",
    "get_code",
    "prepare_logical_zero",
    "to_text",
]

__version__ = "0.1.0"
