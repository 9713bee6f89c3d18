"""Initial data and boundary setups for the three test problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from pnpm_dg.basis import PERIODIC, TRANSMISSIVE, Grid
from pnpm_dg.physics import Burgers, FluxModel, LinearAdvection, TrafficLWR


def sin4(x):
    return np.sin(np.pi * x) ** 4


def two_gaussians(x):
    return -5.0 * np.exp(-50.0 * (x - 0.5) ** 2) + 5.0 * np.exp(-50.0 * (x + 0.5) ** 2)


def traffic_sine(x):
    return 0.5 + 0.25 * np.sin(np.pi * x)


@dataclass(frozen=True)
class Problem:
    name: str
    model: FluxModel
    initial: Callable
    domain: tuple[float, float]
    boundary: str
    exact: Callable | None = None

    def grid(self, n_cells: int) -> Grid:
        return Grid(self.domain[0], self.domain[1], n_cells, self.boundary)


def _advection_exact(x, t):
    # unit speed on a period-2 domain
    return sin4(np.mod(x - t + 1.0, 2.0) - 1.0)


PRESETS = {
    "advection_sin4": Problem("advection_sin4", LinearAdvection(1.0), sin4,
                              (-1.0, 1.0), PERIODIC, _advection_exact),
    "burgers_gaussians": Problem("burgers_gaussians", Burgers(), two_gaussians,
                                 (-1.0, 1.0), TRANSMISSIVE),
    "traffic_sine": Problem("traffic_sine", TrafficLWR(), traffic_sine,
                            (-1.0, 1.0), PERIODIC),
}


def get_problem(name: str) -> Problem:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PRESETS)}") from None
