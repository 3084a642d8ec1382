"""Closed-form Gibbs-state mathematics for a two-level system.

All energies are in natural units with the inverse temperature beta kept
explicit; entropies are in nats so the free-energy formulas hold without
unit conversion.  Every function here is a pure total function over finite
floats; non-finite inputs are rejected eagerly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def _require_finite(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class ThermalContext:
    """Fixed environment of every computation: inverse temperature and the
    boundary energy gap the excited level must return to."""

    beta: float
    e0: float

    def __post_init__(self):
        _require_finite(self.beta, "beta")
        _require_finite(self.e0, "e0")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.e0 < 0:
            raise ValueError(f"boundary energy must be >= 0, got {self.e0}")

    @property
    def p_beta(self) -> float:
        """Excited-level population of the thermal state at the boundary gap.
        Lies in (0, 1/2] since e0 >= 0."""
        return gibbs_population(self.e0, self)


@dataclass(frozen=True)
class QubitState:
    """Energy-diagonal two-level state, represented by its excited-level
    population.  The population vector is (1 - p, p); there is no coherence."""

    p_excited: float

    def __post_init__(self):
        _require_finite(self.p_excited, "p_excited")
        if not 0.0 <= self.p_excited <= 1.0:
            raise ValueError(f"population must lie in [0, 1], got {self.p_excited}")


def gibbs_population(e: float, ctx: ThermalContext) -> float:
    """Excited-level population of the thermal state at energy gap e:
    exp(-beta*e) / (1 + exp(-beta*e)).  Strictly decreasing in e."""
    e = _require_finite(e, "energy")
    # Logistic form is stable for both signs of e.
    return 1.0 / (1.0 + math.exp(ctx.beta * e))


def energy_of_population(p: float, ctx: ThermalContext) -> float:
    """Energy gap whose thermal state has excited population p:
    -(1/beta) * ln(p / (1 - p)).  Exact inverse of gibbs_population on (0, 1)."""
    p = _require_finite(p, "population")
    if not 0.0 < p < 1.0:
        raise ValueError(f"population must lie strictly in (0, 1), got {p}")
    return -math.log(p / (1.0 - p)) / ctx.beta


def partition_function(e: float, ctx: ThermalContext) -> float:
    """Two-level partition function 1 + exp(-beta*e)."""
    e = _require_finite(e, "energy")
    return 1.0 + math.exp(-ctx.beta * e)


def entropy(state: QubitState) -> float:
    """Binary Shannon entropy of the population vector, in nats."""
    p = state.p_excited
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def free_energy(state: QubitState, e: float, ctx: ThermalContext) -> float:
    """Free energy of a state at energy gap e: p*e - S/beta."""
    e = _require_finite(e, "energy")
    return state.p_excited * e - entropy(state) / ctx.beta


def gibbs_free_energy(e: float, ctx: ThermalContext) -> float:
    """Free energy of the thermal state at energy gap e.  Closed form
    -(1/beta) * ln(1 + exp(-beta*e)), which equals
    free_energy(thermal state at e, e)."""
    e = _require_finite(e, "energy")
    # log1p form avoids loss of precision for large beta*e.
    be = ctx.beta * e
    if be >= 0:
        return -math.log1p(math.exp(-be)) / ctx.beta
    # 1 + exp(-be) = exp(-be) * (1 + exp(be))
    return (be - math.log1p(math.exp(be))) / ctx.beta


def gibbs_integral(e_from: float, e_to: float, ctx: ThermalContext) -> float:
    """Integral of the Gibbs curve over [e_from, e_to], in closed form:
    (1/beta) * ln((1 + exp(-beta*e_from)) / (1 + exp(-beta*e_to))).

    Equals gibbs_free_energy(e_to) - gibbs_free_energy(e_from) and is
    antisymmetric under swapping the endpoints."""
    e_from = _require_finite(e_from, "e_from")
    e_to = _require_finite(e_to, "e_to")
    return gibbs_free_energy(e_to, ctx) - gibbs_free_energy(e_from, ctx)
