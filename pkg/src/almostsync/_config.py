"""Numerical tolerances shared by every module.

All checks read from :data:`TOL`; override a field with :func:`set_tolerances`
(the CLI ``--tolerance`` flag does this for the invariant suite slack).
"""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-9      # relative to max(1, ||H||_F)
    unitary: float = 1e-10
    reconstruction: float = 1e-9
    normalization: float = 1e-9
    psd: float = 1e-9
    completeness: float = 1e-8
    projective: float = 1e-8
    degenerate: float = 1e-10    # eigenvalues closer than this are merged
    rank: float = 1e-10          # eigenvalues above this count towards a range
    imaginary: float = 1e-8      # allowed imaginary residue of a correlation entry
    distribution: float = 1e-9
    slack: float = 1e-8          # additive slack on proved inequalities
    dilation_cap: int = 512      # max local dimension after Naimark dilation


TOL = Tolerances()


def set_tolerances(**changes) -> Tolerances:
    """Replace fields of the global tolerance record and return the new one."""
    global TOL
    TOL = replace(TOL, **changes)
    return TOL


def get_tolerances() -> Tolerances:
    return TOL
