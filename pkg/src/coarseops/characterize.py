"""Reachability classifier for population transitions.

A transition p_in -> p_out is achievable at zero work exactly when p_out
lies between p_in and the boundary thermal population (a single partial
thermalization interpolates), or when the input is the pure excited state
(which can be reset to the ground state for free and re-mixed from there).
Every other transition is forbidden: any protocol realizing it loses work,
and the classifier attaches the applicable quantitative no-go bound.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from coarseops.bounds import (
    NoGoBound,
    theorem_main_bound,
    theorem_rev_bound,
    theorem_same_side,
)
from coarseops.protocol import (
    PartialThermalization,
    Protocol,
    build_pure_excited_reset,
)
from coarseops.thermo import ThermalContext


@dataclass(frozen=True)
class TransitionClassification:
    """Tagged verdict: exactly one of lam (mixing), pure_excited, or bound
    (forbidden) is populated."""

    verdict: str  # "mixing" | "pure_excited" | "forbidden"
    lam: float | None = None
    bound: NoGoBound | None = None

    def to_json_dict(self) -> dict:
        out: dict = {"verdict": self.verdict}
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.bound is not None:
            out["bound"] = self.bound.to_json_dict()
        return out


def mixing_coefficient(p_in: float, p_out: float, ctx: ThermalContext) -> float:
    """Weight lambda with p_out = (1-lambda) p_in + lambda p_beta.

    Requires p_out in the closed interval between p_in and p_beta.  When
    p_in = p_beta the interval is the single point p_beta and any weight
    works; returns 1."""
    p_beta = ctx.p_beta
    lo, hi = min(p_in, p_beta), max(p_in, p_beta)
    if not lo <= p_out <= hi:
        raise ValueError(
            f"p_out={p_out} is outside the mixing interval [{lo}, {hi}]"
        )
    if p_in == p_beta:
        return 1.0
    return (p_out - p_in) / (p_beta - p_in)


def classify_transition(
    p_in: float, p_out: float, ctx: ThermalContext
) -> TransitionClassification:
    """Total classifier over [0,1]^2.

    Mixing wins on its closed interval; the pure excited state reaches
    everything; crossing the thermal population or moving away from it on
    either side is forbidden with the matching bound."""
    if not 0.0 <= p_in <= 1.0 or not 0.0 <= p_out <= 1.0:
        raise ValueError(f"populations must lie in [0, 1], got {p_in}, {p_out}")
    p_beta = ctx.p_beta
    if p_beta >= 0.5:
        # At zero boundary gap the swap is free at the boundary, so the
        # forbidden regions collapse; the classifier requires e0 > 0.
        raise ValueError("classification requires a positive boundary energy")
    if p_in == 1.0:
        return TransitionClassification("pure_excited")
    if min(p_in, p_beta) <= p_out <= max(p_in, p_beta):
        return TransitionClassification(
            "mixing", lam=mixing_coefficient(p_in, p_out, ctx)
        )
    if p_in < p_beta < p_out:
        # A target above 1/2 inherits the capped target's bound: mixing the
        # output back toward the thermal population is free, so a protocol
        # reaching p_out also realizes the transition to min(p_out, 1/2).
        p_out_eff = min(p_out, 0.5)
        if p_in > 0.0:
            bound = theorem_main_bound(p_in, p_out_eff, ctx)
        else:
            # Pure ground input: the occupation-conditioning factor is
            # zero, leaving a vacuous (but still valid) bound.
            template = theorem_main_bound(p_beta / 2, p_out_eff, ctx)
            bound = dataclasses.replace(
                template, p_1=0.0, probability_lower_bound=0.0
            )
    elif p_out < p_beta < p_in:
        bound = theorem_rev_bound(p_in, p_out, ctx)
    else:
        bound = theorem_same_side(p_in, p_out, ctx)
    return TransitionClassification("forbidden", bound=bound)


def synthesize_protocol(
    classification: TransitionClassification,
    p_in: float,
    p_out: float,
    ctx: ThermalContext,
) -> Protocol:
    """A witness protocol for an achievable verdict: reproduces p_out
    exactly and never produces negative work."""
    if classification.verdict == "mixing":
        return Protocol(ctx, [PartialThermalization(classification.lam)])
    if classification.verdict == "pure_excited":
        if p_out >= ctx.p_beta:
            # Mix the pure excited state down toward the thermal population;
            # no level moves, so no work at all.
            lam = (1.0 - p_out) / (1.0 - ctx.p_beta)
            return Protocol(ctx, [PartialThermalization(lam)])
        # Reset to the ground state (extracts the gap when occupied, never
        # pays), then mix up toward the thermal population.
        reset = build_pure_excited_reset(ctx)
        lam = mixing_coefficient(0.0, p_out, ctx)
        return Protocol(ctx, list(reset.steps) + [PartialThermalization(lam)])
    raise ValueError("cannot synthesize a protocol for a forbidden transition")
