"""Loop-model observables on random planar maps.

Three mutually cross-checking computation routes — planar-configuration
enumeration, Schwinger-Dyson power series on graph loop algebras, and
random matrix Monte Carlo — plus exact solvers for the one-coupling cup
model and the two-coupling double-cup (Potts) model.
"""

from ._kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
