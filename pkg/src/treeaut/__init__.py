"""Automorphisms of spherically homogeneous rooted trees, truncated to finite depth.

The modules cover level-by-level element tables (tree), recursive definitions
(recursion, grammar), cycle dynamics and settledness (cycles), affine maps of
Z/d^n transported through an odometer (affine), and the finite shadows of
iterated monodromy groups (monodromy, bsgs).
"""
__version__ = "0.1.0"

from .tree import (
    BudgetError,
    DepthError,
    TreeError,
    TreeShape,
    TruncatedAutomorphism,
    Vertex,
    compose,
    distance,
    inverse,
    order_profile,
    power,
    sign_at_level,
)
from .recursion import RecursionEnv, odometer, profile_element, section, truncate
from .grammar import ParseError, parse_definitions, parse_expr
from .cycles import cycle_decomposition, settled_stats, stable_up_to, strongly_settle
from .affine import AffineElement, predicted_cycle_length, realize_affine, theta_signature
from .bsgs import contains, level_group
from .monodromy import img_generators, normalizer_words, coset_minimal_element

__all__ = [
    "BudgetError",
    "DepthError",
    "TreeError",
    "TreeShape",
    "TruncatedAutomorphism",
    "Vertex",
    "compose",
    "distance",
    "inverse",
    "order_profile",
    "power",
    "sign_at_level",
    "RecursionEnv",
    "odometer",
    "profile_element",
    "section",
    "truncate",
    "ParseError",
    "parse_definitions",
    "parse_expr",
    "cycle_decomposition",
    "settled_stats",
    "stable_up_to",
    "strongly_settle",
    "AffineElement",
    "predicted_cycle_length",
    "realize_affine",
    "theta_signature",
    "contains",
    "level_group",
    "img_generators",
    "normalizer_words",
    "coset_minimal_element",
]
