"""Numerical laboratory for many-body quantum thermal machines.

Collective-spin Otto and continuous engines, critical Kibble-Zurek engines
on free-fermion chains, counterdiabatically driven spin-chain engines, and
localization-based engines, with the thermodynamic bookkeeping shared by
all of them.  Units: hbar = k_B = 1 throughout.
"""

__version__ = "0.1.0"

from .thermo import CycleOutcome, StrokeRecord  # noqa: F401
from .spins import SpinEnsembleSpec, DickeBlock  # noqa: F401
