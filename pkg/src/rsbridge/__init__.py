"""Reflected Schrodinger bridge solver on implicit 3D domains.

Pipeline: implicit spiral geometry -> masked tetrahedral mesh -> P1 operators
-> (optional) divergence-free drift projection -> forward/backward potential
sweeps fixed to the endpoint densities -> feedback control -> reflected-SDE
validation.
"""

from rsbridge.accel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
