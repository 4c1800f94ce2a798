from src.stability.compare import EigMatch, EigPair, eig_compare
from src.stability.gep import GepSolution, StabilityVerdict, generalized_eig, stability_verdict
from src.stability.proper import ProperSystem, to_proper

__all__ = [
    "EigMatch",
    "EigPair",
    "eig_compare",
    "GepSolution",
    "StabilityVerdict",
    "generalized_eig",
    "stability_verdict",
    "ProperSystem",
    "to_proper",
]
