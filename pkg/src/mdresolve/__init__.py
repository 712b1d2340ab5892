"""Entity resolution driven by matching dependencies.

Blocking-MDs assign records to blocks by a chase to fixpoint, a linear SVM
classifies candidate pairs, and merge-MDs fuse duplicates with matching
functions into a unique resolved instance.
"""
__version__ = "0.1.0"
