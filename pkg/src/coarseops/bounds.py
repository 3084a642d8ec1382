"""Closed-form no-go bounds on work loss for forbidden transitions, plus
the probability-theory helpers they rest on.

Every bound states: any protocol realizing the given population transition
loses at least `work_threshold` of work with probability at least
`probability_lower_bound`.  The probability factors as p_1 (stage-I
conditioning), p_2 (stage-II concentration), p_3 (stage-III conditioning),
and p_f (fraction of branches ending beyond the pivot level q*).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from coarseops.paths import epsilon_iii, epsilon_iii_tilde
from coarseops.thermo import ThermalContext, energy_of_population


@dataclass(frozen=True)
class NoGoBound:
    work_threshold: float
    probability_lower_bound: float
    p_1: float
    p_2: float
    p_3: float
    p_f: float
    regime: str

    def __post_init__(self):
        for name in ("p_1", "p_2", "p_3", "p_f"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.work_threshold < 0.0:
            raise ValueError("work threshold must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.work_threshold,
            "probability": self.probability_lower_bound,
            "components": {
                "p1": self.p_1,
                "p2": self.p_2,
                "p3": self.p_3,
                "pf": self.p_f,
            },
            "regime": self.regime,
        }


def _product_bound(threshold, p1, p2, p3, pf, regime) -> NoGoBound:
    return NoGoBound(threshold, p1 * p2 * p3 * pf, p1, p2, p3, pf, regime)


def lemma_simplecase_bound(
    p_in: float, p_out: float, ctx: ThermalContext
) -> tuple[float, float]:
    """Simple-case loss bound for the staged quasi-static protocol: losing
    at least (E(p_in) - E(p_out))/2 has probability at least
    p_in * p_out * (1 - exp(-2 (1/2 - p_out)^2))."""
    if not 0.0 < p_in < 1.0:
        raise ValueError(f"p_in must lie strictly in (0, 1), got {p_in}")
    if not 0.0 < p_out < 0.5:
        raise ValueError(f"p_out must lie strictly in (0, 1/2), got {p_out}")
    threshold = (
        energy_of_population(p_in, ctx) - energy_of_population(p_out, ctx)
    ) / 2.0
    prob = p_in * p_out * (1.0 - math.exp(-2.0 * (0.5 - p_out) ** 2))
    return threshold, prob


def hoeffding_tail(n: int, p: float) -> float:
    """Upper bound exp(-2 n (1/2 - p)^2) on P(Bin(n, p) >= n/2)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p < 0.5:
        raise ValueError(f"p must lie in [0, 1/2), got {p}")
    return math.exp(-2.0 * n * (0.5 - p) ** 2)


def exact_binomial_upper_tail(n: int, p: float) -> float:
    """Exact P(Bin(n, p) >= n/2), the quantity hoeffding_tail dominates."""
    k_min = math.ceil(n / 2)
    return float(
        sum(
            math.comb(n, k) * p**k * (1.0 - p) ** (n - k)
            for k in range(k_min, n + 1)
        )
    )


def lemma_w2_probability(epsilon2: float, ctx: ThermalContext) -> float:
    """Stage-II concentration probability min{2/3, eps / (4/beta + eps)}."""
    if epsilon2 <= 0.0:
        raise ValueError(f"epsilon2 must be positive, got {epsilon2}")
    return min(2.0 / 3.0, epsilon2 / (4.0 / ctx.beta + epsilon2))


def lemma_path_bound(
    p_in: float, q_out: float, ctx: ThermalContext
) -> tuple[float, float]:
    """Single-path loss bound: a path from p_in ending at level q_out loses
    at least epsilon_iii(q_out)/2 with probability at least
    p_in * min{2/3, eps/(8/beta + eps)} * q_out."""
    p_beta = ctx.p_beta
    if not (0.0 < p_in < p_beta < q_out <= 0.5):
        raise ValueError(
            f"need 1/2 >= q_out > p_beta > p_in > 0, got "
            f"p_in={p_in}, p_beta={p_beta}, q_out={q_out}"
        )
    eps = epsilon_iii(q_out, ctx)
    # Stage II absorbs half the stage-III margin, hence the 8/beta.
    p2 = min(2.0 / 3.0, eps / (8.0 / ctx.beta + eps))
    return eps / 2.0, p_in * p2 * q_out


def theorem_main_bound(
    p_in: float, p_out: float, ctx: ThermalContext
) -> NoGoBound:
    """No-go bound for raising a below-thermal state above the thermal
    population (p_in < p_beta < p_out <= 1/2)."""
    p_beta = ctx.p_beta
    if not (0.0 < p_in < p_beta < p_out <= 0.5):
        raise ValueError(
            f"need 1/2 >= p_out > p_beta > p_in > 0, got "
            f"p_in={p_in}, p_beta={p_beta}, p_out={p_out}"
        )
    q_star = (p_out + p_beta) / 2.0
    eps = epsilon_iii(q_star, ctx)
    p2 = min(2.0 / 3.0, eps / (8.0 / ctx.beta + eps))
    return _product_bound(
        eps / 2.0, p_in, p2, q_star, (p_out - p_beta) / 2.0, "A6"
    )


def theorem_rev_bound(
    p_in: float, p_out: float, ctx: ThermalContext
) -> NoGoBound:
    """No-go bound for lowering an above-thermal state below the thermal
    population (p_out < p_beta < p_in < 1; the pure excited state is the
    achievable exception)."""
    p_beta = ctx.p_beta
    if not (0.0 <= p_out < p_beta < p_in < 1.0):
        raise ValueError(
            f"need 0 <= p_out < p_beta < p_in < 1, got "
            f"p_in={p_in}, p_beta={p_beta}, p_out={p_out}"
        )
    q_star = (p_out + p_beta) / 2.0
    eps = epsilon_iii_tilde(q_star, ctx)
    p2 = min(2.0 / 3.0, eps / (8.0 / ctx.beta + eps))
    return _product_bound(
        eps / 2.0,
        min(p_in, 1.0 - p_in),
        p2,
        1.0 - q_star,
        (p_beta - p_out) / 2.0,
        "A7",
    )


def theorem_same_side(
    p_in: float, p_out: float, ctx: ThermalContext
) -> NoGoBound:
    """No-go bound for moving away from the thermal population on the same
    side (p_beta <= p_in < p_out or p_beta >= p_in > p_out).

    The source result asserts only a positive loss with positive
    probability; this is a constructive instantiation composing the
    stage bounds of the applicable side at q* = (p_in + p_out)/2."""
    p_beta = ctx.p_beta
    if p_beta <= p_in < p_out:
        q_star = (p_in + p_out) / 2.0
        eps = epsilon_iii(q_star, ctx)
        p2 = min(2.0 / 3.0, eps / (8.0 / ctx.beta + eps))
        return _product_bound(
            eps / 2.0,
            min(p_in, 1.0 - p_in),
            p2,
            q_star,
            (p_out - p_in) / 2.0,
            "A8",
        )
    if p_beta >= p_in > p_out >= 0.0:
        q_star = (p_in + p_out) / 2.0
        eps = epsilon_iii_tilde(q_star, ctx)
        p2 = min(2.0 / 3.0, eps / (8.0 / ctx.beta + eps))
        return _product_bound(
            eps / 2.0,
            p_in,
            p2,
            1.0 - q_star,
            (p_in - p_out) / 2.0,
            "A8",
        )
    raise ValueError(
        f"need p_beta <= p_in < p_out or p_beta >= p_in > p_out, got "
        f"p_in={p_in}, p_beta={p_beta}, p_out={p_out}"
    )


@dataclass(frozen=True)
class ReverseMarkovBounds:
    above: float  # lower bound on P(Y > a)
    below: float  # lower bound on P(Y < a)
    above_clamped: bool
    below_clamped: bool


def reverse_markov_lower(mean: float, a: float) -> ReverseMarkovBounds:
    """For Y supported on [0, 1]: P(Y > a) >= 1 - (1 - EY)/(1 - a) and
    P(Y < a) >= 1 - EY/a.  Negative (vacuous) bounds are clamped to 0 and
    flagged."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie strictly in (0, 1), got {a}")
    if not 0.0 <= mean <= 1.0:
        raise ValueError(f"mean of a [0,1] variable must lie in [0,1], got {mean}")
    above = 1.0 - (1.0 - mean) / (1.0 - a)
    below = 1.0 - mean / a
    return ReverseMarkovBounds(
        max(0.0, above), max(0.0, below), above < 0.0, below < 0.0
    )


def cantelli_lower(delta: float, variance: float) -> float:
    """P(X <= EX + delta) >= delta^2 / (Var X + delta^2)."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if variance < 0.0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    return delta * delta / (variance + delta * delta)
