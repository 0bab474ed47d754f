"""Flows on compact hyperbolic quotients: a left-invariant metric on the
matrix group, certified distances on the quotient, the geodesic and
horocycle flows with time changes, and falsification-style expansiveness
experiments."""

from .config import Config
from .fuchsian import FuchsianGroup, QuotientPoint, preset_bolza
from .lab import TestVerdict
from .metric import distance
from .sl2 import GroupElement, one_param

__version__ = "0.1.0"

__all__ = [
    "Config",
    "FuchsianGroup",
    "GroupElement",
    "QuotientPoint",
    "TestVerdict",
    "__version__",
    "distance",
    "one_param",
    "preset_bolza",
]
