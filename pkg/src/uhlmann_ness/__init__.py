"""Mean Uhlmann curvature of fermionic Gaussian steady states.

This package computes the quantum geometric tensor of the non-equilibrium
steady state of quadratic open fermionic models, both for finite chains and
per site in the thermodynamic limit.
"""

from uhlmann_ness.configuration import Configuration
from uhlmann_ness.geometry import evaluate_point
from uhlmann_ness.graph import graph
from uhlmann_ness.models import ModelPoint
from uhlmann_ness.scaling import fit_power_law, sweep
from uhlmann_ness.translational import muc_per_site_quadrature, muc_per_site_residues

__all__ = [
    "Configuration",
    "ModelPoint",
    "evaluate_point",
    "fit_power_law",
    "graph",
    "muc_per_site_quadrature",
    "muc_per_site_residues",
    "sweep",
]
