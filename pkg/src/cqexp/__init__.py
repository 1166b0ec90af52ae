"""Sphere-packing exponents and converse bounds for classical-quantum channels.

Submodules:
    operators      Hermitian matrix functions and density operators.
    divergences    Petz and log-Euclidean Renyi divergences.
    channels       c-q channels, Renyi informations and radii.
    sphere_packing exponent solvers and saddle points.
    ns_classical   Nussbaum-Szkola reduction, tilted families, tail bounds.
    ht_oracle      exact Neyman-Pearson trade-off for small products.
    converse       lower bounds on error probabilities.
    specio, cli    channel-spec files and the command-line front end.
"""

__version__ = "0.1.0"

from .channels import CQChannel, capacity, r_infinity, renyi_radius  # noqa: E402
from .operators import DensityOperator, mat_power  # noqa: E402
from .sphere_packing import e_sp_max, exponent_curve, saddle_solve  # noqa: E402

__all__ = ["__version__", "CQChannel", "DensityOperator", "mat_power", "capacity", "r_infinity",
           "renyi_radius", "e_sp_max", "exponent_curve", "saddle_solve"]
