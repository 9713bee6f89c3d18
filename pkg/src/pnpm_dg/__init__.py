"""P_NP_M reconstruction-based discontinuous Galerkin schemes for 1D scalar
conservation laws, with a square-entropy-stable flux limiter."""

from pnpm_dg.basis import Grid, ReferenceBasis, project
from pnpm_dg.physics import Burgers, FluxModel, LinearAdvection, TrafficLWR, numerical_flux
from pnpm_dg.reconstruction import ModalField, ReconField, ReconOperator, build_operator, reconstruct
from pnpm_dg.scheme import Discretization, EntropyBudget, SchemeConfig, integrate

__all__ = [
    "Burgers", "Discretization", "EntropyBudget", "FluxModel", "Grid", "LinearAdvection",
    "ModalField", "ReconField", "ReconOperator", "ReferenceBasis", "SchemeConfig",
    "TrafficLWR", "build_operator", "integrate", "numerical_flux", "project", "reconstruct",
]
