"""Outliers of finite-rank perturbations of isotropic non-Hermitian random matrices."""

from __future__ import annotations

from .jordan import BasisSpec, JordanGroup, JordanSpec, embed_perturbation
from .profiles import RingGeometry, Uniform, parse_profile, ring_radii

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "JordanGroup",
    "JordanSpec",
    "RingGeometry",
    "Uniform",
    "embed_perturbation",
    "parse_profile",
    "ring_radii",
    "__version__",
]
