"""Piecewise-linear slow-fast systems: exact zone flows, canards and mixed-mode oscillations."""
from .model import (Params, ReturnParams, PwlCurve, SystemSpec, Zone, PlanarConfig,
                    ValidationError, NumericalError, build_minimal_3d, build_global_return,
                    build_planar, eval_pwl)
from .geometry import classify, max_winding, slow_manifolds, rotation_axis
from .hybrid import integrate, winding_number
from .canard import maximal_canards, maximal_canards_report, selected_canard, weak_canard_gap
from .singular import reduced_flow, singular_portrait
from .planar import find_cycle, explosion_scan, transient_mmo
from .mmo import central_spectrum, poincare_map, find_periodic_mmo, signature

__all__ = ["Params", "ReturnParams", "PwlCurve", "SystemSpec", "Zone", "PlanarConfig",
           "ValidationError", "NumericalError", "build_minimal_3d", "build_global_return",
           "build_planar", "eval_pwl", "classify", "max_winding", "slow_manifolds",
           "rotation_axis", "integrate", "winding_number", "maximal_canards",
           "maximal_canards_report", "selected_canard", "weak_canard_gap", "reduced_flow",
           "singular_portrait", "find_cycle", "explosion_scan", "transient_mmo",
           "central_spectrum", "poincare_map", "find_periodic_mmo", "signature"]
