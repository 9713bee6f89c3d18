"""Scalar flux models with their square-entropy pairs, and numerical fluxes.

For ``Q(u) = u^2 / 2`` the entropy flux is ``F(u) = u f(u) - g(u)`` where
``g`` is a primitive of ``f``.  Only differences of ``g`` are ever used, so
its integration constant is arbitrary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RUSANOV = "rusanov"
UPWIND = "upwind"
GODUNOV = "godunov"
NUMERICAL_FLUXES = (RUSANOV, UPWIND, GODUNOV)


class InadmissibleStateError(ValueError):
    pass


@dataclass(frozen=True, kw_only=True)
class FluxModel:
    """Base class; subclasses provide ``f``, ``df`` and ``g``."""

    name: str = ""
    admissible_range: tuple[float, float] = (-np.inf, np.inf)

    linear = False

    def f(self, u):
        raise NotImplementedError

    def df(self, u):
        raise NotImplementedError

    def g(self, u):
        raise NotImplementedError

    def entropy_flux(self, u):
        return u * self.f(u) - self.g(u)

    def flux_difference(self, w, u):
        """``f(w) - f(u)``; overridden where it can be formed without cancellation."""
        return self.f(w) - self.f(u)

    def mean_flux(self, a, b):
        """``(g(b) - g(a)) / (b - a)``, with the limit ``f(a)`` when ``a == b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        safe = np.where(d == 0.0, 1.0, d)
        return np.where(d == 0.0, self.f(a), (self.g(b) - self.g(a)) / safe)

    def critical_points(self) -> tuple[float, ...]:
        """Zeros of ``f'``; needed for the exact Riemann flux."""
        return ()

    def max_speed(self, u) -> float:
        return float(np.max(np.abs(self.df(u)), initial=0.0))

    def check_admissible(self, u):
        lo, hi = self.admissible_range
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)) or np.any(u < lo) or np.any(u > hi):
            bad = u[~((u >= lo) & (u <= hi))]
            raise InadmissibleStateError(
                f"{self.name}: state(s) outside admissible range [{lo}, {hi}]: "
                f"{bad[:5]}")


@dataclass(frozen=True)
class LinearAdvection(FluxModel):
    speed: float = 1.0
    name: str = field(default="advection", kw_only=True)

    linear = True

    def f(self, u):
        return self.speed * u

    def df(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.speed)

    def g(self, u):
        return 0.5 * self.speed * u * u

    def flux_difference(self, w, u):
        return self.speed * (w - u)

    def mean_flux(self, a, b):
        return 0.5 * self.speed * (np.asarray(a) + np.asarray(b))


@dataclass(frozen=True)
class Burgers(FluxModel):
    name: str = field(default="burgers", kw_only=True)

    def f(self, u):
        return 0.5 * u * u

    def df(self, u):
        return np.asarray(u, dtype=float)

    def g(self, u):
        return u * u * u / 6.0

    def flux_difference(self, w, u):
        return 0.5 * (w - u) * (w + u)

    def mean_flux(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return (a * a + a * b + b * b) / 6.0

    def critical_points(self):
        return (0.0,)


@dataclass(frozen=True)
class TrafficLWR(FluxModel):
    """``f(rho) = 2 rho exp(-rho^2 / 2)``, strictly concave on ``(0, 1)``."""

    name: str = field(default="traffic", kw_only=True)
    admissible_range: tuple[float, float] = field(default=(0.0, 1.0), kw_only=True)

    def f(self, u):
        return 2.0 * u * np.exp(-0.5 * u * u)

    def df(self, u):
        return 2.0 * (1.0 - u * u) * np.exp(-0.5 * u * u)

    def g(self, u):
        return -2.0 * np.exp(-0.5 * u * u)

    def mean_flux(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        safe = np.where(d == 0.0, 1.0, d)
        # g(b) - g(a) = -2 e^{-a^2/2} expm1(-(b - a)(b + a) / 2)
        dg = -2.0 * np.exp(-0.5 * a * a) * np.expm1(-0.5 * d * (a + b))
        return np.where(d == 0.0, self.f(a), dg / safe)

    def critical_points(self):
        return (-1.0, 1.0)


MODELS = {
    "advection": LinearAdvection,
    "burgers": Burgers,
    "traffic": TrafficLWR,
}


def make_model(name: str, **kwargs) -> FluxModel:
    try:
        return MODELS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown flux model {name!r}; choose from {sorted(MODELS)}") from None


def flux_eval(model: FluxModel, u):
    model.check_admissible(u)
    return model.f(u)


def primitive_eval(model: FluxModel, u):
    return model.g(u)


# {{{ numerical fluxes


def rusanov(model: FluxModel, ul, ur):
    smax = np.maximum(np.abs(model.df(ul)), np.abs(model.df(ur)))
    return 0.5 * (model.f(ul) + model.f(ur)) - 0.5 * smax * (ur - ul)


def upwind(model: FluxModel, ul, ur):
    if not model.linear:
        raise ValueError(f"upwind flux is only defined for linear advection, not {model.name}")
    return model.speed * (ul if model.speed >= 0 else ur)


def godunov(model: FluxModel, ul, ur):
    """Exact Riemann flux: min of f over [ul, ur] if ul <= ur, else max over [ur, ul]."""
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    lo = np.minimum(ul, ur)
    hi = np.maximum(ul, ur)
    fl = model.f(ul)
    fr = model.f(ur)
    fmin = np.minimum(fl, fr)
    fmax = np.maximum(fl, fr)
    for c in model.critical_points():
        inside = (lo <= c) & (c <= hi)
        fc = model.f(c)
        fmin = np.where(inside, np.minimum(fmin, fc), fmin)
        fmax = np.where(inside, np.maximum(fmax, fc), fmax)
    return np.where(ul <= ur, fmin, fmax)


_FLUXES = {RUSANOV: rusanov, UPWIND: upwind, GODUNOV: godunov}


def numerical_flux(kind: str, model: FluxModel, ul, ur):
    try:
        fn = _FLUXES[kind]
    except KeyError:
        raise ValueError(f"unknown numerical flux {kind!r}; choose from {NUMERICAL_FLUXES}") from None
    return fn(model, ul, ur)


# }}}
