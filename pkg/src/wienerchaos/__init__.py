"""Wiener chaos numerics: exact tensor algebra, chaos sampling and limit-theorem experiments."""

from .algebra import ChaosExpansion, ChaosVectorSpec
from .tensor import BipartiteTensor, ShapeError, SymmetricTensor, contract, inner, symmetrize

__all__ = [
    "BipartiteTensor",
    "ChaosExpansion",
    "ChaosVectorSpec",
    "ShapeError",
    "SymmetricTensor",
    "contract",
    "inner",
    "symmetrize",
]
__version__ = "0.1.0"
