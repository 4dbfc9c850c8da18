"""Quadratic equations in free metabelian groups: decision, witnesses, certificates."""

from .dsl import DslError, parse
from .lifter import AbelianSolution, lift, verify
from .mgroup import MElem, parse_word, phi, sigma_of_word, tau_L
from .oracle import brute_oracle
from .pipeline import SolveConfig, Verdict, solve, verify_certificate
from .qnormal import MixedWord, StandardEquation, standardize, transport_solution
from .zlattice import Lattice, Wedge, hnf_with_transform, reduce_basis, snf_with_transform

__version__ = "0.1.0"

__all__ = [
    "AbelianSolution", "DslError", "Lattice", "MElem", "MixedWord", "SolveConfig",
    "StandardEquation", "Verdict", "Wedge", "brute_oracle", "hnf_with_transform", "lift",
    "parse", "parse_word", "phi", "reduce_basis", "sigma_of_word", "snf_with_transform",
    "solve", "standardize", "tau_L", "transport_solution", "verify", "verify_certificate",
]
