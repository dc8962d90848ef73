"""Ergodicity, mixing and purity criteria for quantum Markov semigroups on matrix algebras."""

__version__ = "0.1.0"

from .errors import QDSError
from .operator_core import DensityState, OperatorSubspace, Superoperator
from .semigroup import CPMap, Classification, LindbladGenerator, classify, kms_dual
from .spinchain import PopescuTensor, purity_check

__all__ = [
    "CPMap",
    "Classification",
    "DensityState",
    "LindbladGenerator",
    "OperatorSubspace",
    "PopescuTensor",
    "QDSError",
    "Superoperator",
    "classify",
    "kms_dual",
    "purity_check",
]
