"""sdlab: a desk-scale laboratory for diffusion operators with singular drifts.

Builds the resolvent of -Laplacian + b.grad on a periodic torus from
weighted spectral factors inverted by a guarded Neumann series, drives
the semigroup by backward Euler through that resolvent, verifies the
pointwise kernel estimates by grid-free quadrature, and cross-validates
the induced diffusion by Monte Carlo.
"""

__version__ = "0.1.0"

from .constants import DimensionConstants, interval_I, kappa_d, m_d
from .fields import (
    ClassEstimate,
    DriftSpec,
    drift_from_config,
    estimate_class_F,
    estimate_class_F_half,
    estimate_class_K,
    mollify,
    truncate,
)
from .grid import (
    Grid,
    GridFunction,
    GridVectorField,
    MultiplierSymbol,
    apply_multiplier,
    bessel_norm,
    gradient_apply,
    laplacian_apply,
    lp_norm,
    multiply_pointwise,
    pairing,
)
from .resolvent import REPRESENTATIONS, ResolventAssembly, ResolventParams
from .semigroup import SemigroupParams, evolve
from .sim import SimParams, simulate_paths

__all__ = [
    "__version__",
    "Grid",
    "GridFunction",
    "GridVectorField",
    "MultiplierSymbol",
    "apply_multiplier",
    "lp_norm",
    "pairing",
    "bessel_norm",
    "multiply_pointwise",
    "laplacian_apply",
    "gradient_apply",
    "m_d",
    "kappa_d",
    "interval_I",
    "DimensionConstants",
    "DriftSpec",
    "drift_from_config",
    "ClassEstimate",
    "truncate",
    "mollify",
    "estimate_class_F",
    "estimate_class_F_half",
    "estimate_class_K",
    "ResolventParams",
    "ResolventAssembly",
    "REPRESENTATIONS",
    "SemigroupParams",
    "evolve",
    "SimParams",
    "simulate_paths",
]
