"""Lie point-symmetry verification for two-component reaction-diffusion systems."""
__version__ = "0.1.0"

from .expr import (ParseError, SamplingDomain, SymbolTable, UnknownSymbolError, ZeroStatus,
                   is_zero, normalize, parse, to_text)
from .model import DiffusionSystem, Kind, VectorField, parse_field, validate
from .prolong import check_symmetry, closure_check, lie_bracket, prolong2_apply

__all__ = [
    "__version__",
    "DiffusionSystem", "Kind", "ParseError", "SamplingDomain", "SymbolTable",
    "UnknownSymbolError", "VectorField", "ZeroStatus", "check_symmetry", "closure_check",
    "is_zero", "lie_bracket", "normalize", "parse", "parse_field", "prolong2_apply",
    "to_text", "validate",
]
