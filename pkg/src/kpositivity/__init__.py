"""Numerical certification and refutation of k-positivity for linear maps on matrices."""
from . import decomp, dtype, falsify, kcriteria, linalg, maps
from .errors import KPositivityError
from .falsify import SearchBudget
from .kcriteria import Status, Verdict, Witness
from .maps import ChoiMap, DTypeMap, KrausDifference

__all__ = [
    "ChoiMap",
    "DTypeMap",
    "KPositivityError",
    "KrausDifference",
    "SearchBudget",
    "Status",
    "Verdict",
    "Witness",
    "decomp",
    "dtype",
    "falsify",
    "kcriteria",
    "linalg",
    "maps",
]
