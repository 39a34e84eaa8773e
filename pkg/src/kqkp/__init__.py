"""Exact solver for the 0-1 k-item quadratic knapsack problem.

Upper bounds come from a semidefinite relaxation with rank-one constraint
matrices, solved by a specialized predictor-corrector interior-point method
and strengthened by triangle inequalities handled through a dynamic proximal
bundle method.  Lower bounds come from greedy/local-search heuristics, and a
best-first branch-and-bound (with a branch-and-prune fast path for small
cardinalities) ties everything together.
"""

__version__ = "0.1.0"

from .instance import Instance, Preprocessed, preprocess, validate, fix_variable

__all__ = ["Instance", "Preprocessed", "preprocess", "validate", "fix_variable"]
