"""Exact-arithmetic depth-truncated fusion of Virasoro and Heisenberg modules."""

from __future__ import annotations

from .chiral_algebra import Mode, heisenberg, preset, virasoro
from .exact_linalg import RatMatrix, jordan_structure, rat
from .hlz_dual import compat_constraints, crosscheck, dual_l0_matrix, hlz_fuse
from .hw_modules import (
    auto_singular_relations,
    find_singular_vectors,
    gram_matrix,
    heisenberg_module,
    singular_at_levels,
    virasoro_module,
)
from .ngk_fusion import fuse, mode_action

__all__ = [
    "Mode", "RatMatrix", "auto_singular_relations", "compat_constraints", "crosscheck", "dual_l0_matrix",
    "find_singular_vectors", "fuse", "gram_matrix", "heisenberg", "heisenberg_module", "hlz_fuse",
    "jordan_structure", "mode_action", "preset", "rat", "singular_at_levels", "virasoro", "virasoro_module",
]
