"""Numerical verification of twistorial maps between Weyl spaces.

Second-order jets carry every field; Weyl connections, horizontally
conformal submersions, twistoriality criteria and abelian monopoles are
evaluated pointwise as residuals.
"""

from . import errors, exprconf, gauge, jets, submersion, twistor, weyl, zoo
from .errors import *  # noqa: F401,F403
from .exprconf import load_scenario, parse, to_string
from .gauge import GaugePair, monopole_residual, pullback_connection, two_of_three
from .submersion import SubmersionScenario
from .weyl import WeylStructure

__version__ = "0.1.0"
