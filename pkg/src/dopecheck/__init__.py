"""Decide whether parameterised programs and reactive models are clean.

The library offers three routes to a verdict: exhaustive enumeration of a
sequential program (``seqcheck``), weakest-precondition verification
conditions over a self-composition (``wpengine``), and trace-quantified
formulas plus a bounded semantic oracle on finite transition systems
(``hypercheck``).  Every route returns a ``Verdict``.
"""
from .contracts import Contract, Distance, affine, constant, hausdorff, load_contract, past_forgetful, threshold
from .values import INF, Grid
from .verdict import CLEAN, DOPED, UNKNOWN, Verdict

__version__ = "0.1.0"

__all__ = [
    "CLEAN", "Contract", "DOPED", "Distance", "Grid", "INF", "UNKNOWN", "Verdict", "__version__", "affine",
    "constant", "hausdorff", "load_contract", "past_forgetful", "threshold",
]
