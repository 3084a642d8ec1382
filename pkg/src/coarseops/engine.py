"""Exact and sampled evaluation of a protocol.

The exact law of the work random variable is computed by dynamic
programming over (occupation bit, accumulated work value).  An exhaustive
branch enumeration serves as an independent oracle for small protocols,
and a seeded counter-based Monte Carlo handles protocols too large for
either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from coarseops.protocol import (
    BistochasticTransformation,
    LevelTransformation,
    PartialThermalization,
    Protocol,
)
from coarseops.thermo import QubitState, gibbs_population

# Work atoms closer than this are one atom: increments drawn from a common
# grid are meant to collide.
MERGE_TOL = 1e-10
# Refuse rather than bin beyond this many atoms; binning would corrupt the
# tail probabilities the bound verifiers rely on.
ATOM_CAP = 1_000_000
# Exhaustive enumeration is exponential in the branching steps.
BRUTE_FORCE_MAX_BRANCHES = 20


class ResourceError(RuntimeError):
    """The exact computation would exceed its configured budget."""


def _merge_close(values: np.ndarray, probs: np.ndarray, tol: float = MERGE_TOL):
    """Group work values closer than tol (after sorting) into single atoms
    at their probability-weighted mean."""
    order = np.argsort(values)
    values = values[order]
    probs = probs[order]
    if len(values) == 0:
        return values, probs
    group = np.concatenate(([0], np.cumsum(np.diff(values) >= tol)))
    n_groups = group[-1] + 1
    mass = np.zeros(n_groups)
    np.add.at(mass, group, probs)
    weighted = np.zeros(n_groups)
    np.add.at(weighted, group, probs * values)
    first = np.zeros(n_groups)
    first[group[::-1]] = values[::-1]
    with np.errstate(invalid="ignore"):
        centers = np.where(mass > 0, weighted / np.maximum(mass, 1e-300), first)
    return centers, mass


@dataclass(frozen=True)
class WorkDistribution:
    """Finite probability mass over work values, sorted ascending."""

    values: tuple[float, ...]
    probabilities: tuple[float, ...]

    @staticmethod
    def from_atoms(values, probs) -> "WorkDistribution":
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        keep = probs > 0
        values, probs = _merge_close(values[keep], probs[keep])
        return WorkDistribution(tuple(values.tolist()), tuple(probs.tolist()))

    @property
    def atoms(self) -> dict[float, float]:
        return dict(zip(self.values, self.probabilities))

    @property
    def total(self) -> float:
        return float(sum(self.probabilities))

    @property
    def mean(self) -> float:
        return float(
            sum(w * p for w, p in zip(self.values, self.probabilities))
        )

    @property
    def variance(self) -> float:
        m = self.mean
        return float(
            sum((w - m) ** 2 * p for w, p in zip(self.values, self.probabilities))
        )

    def to_csv(self) -> str:
        lines = ["work,probability"]
        for w, p in zip(self.values, self.probabilities):
            lines.append(f"{w:.17g},{p:.17g}")
        return "\n".join(lines) + "\n"


def prob_work_at_most(dist: WorkDistribution, threshold: float) -> float:
    """Total mass at or below the threshold, with a small slack so atoms
    sitting numerically on the threshold are counted."""
    return float(
        sum(
            p
            for w, p in zip(dist.values, dist.probabilities)
            if w <= threshold + 1e-12
        )
    )


def total_variation(
    a: WorkDistribution, b: WorkDistribution, tol: float = MERGE_TOL
) -> float:
    """Total-variation distance, matching atoms whose work values agree
    within tol."""
    values = np.concatenate([np.asarray(a.values), np.asarray(b.values)])
    signed = np.concatenate(
        [np.asarray(a.probabilities), -np.asarray(b.probabilities)]
    )
    order = np.argsort(values)
    values, signed = values[order], signed[order]
    if len(values) == 0:
        return 0.0
    group = np.concatenate(([0], np.cumsum(np.diff(values) >= tol)))
    net = np.zeros(group[-1] + 1)
    np.add.at(net, group, signed)
    return 0.5 * float(np.abs(net).sum())


def final_state(proto: Protocol, initial: QubitState) -> QubitState:
    """Deterministic population evolution: thermalization mixes toward the
    thermal population at the current gap, shifts leave populations alone,
    swaps mix with the flipped population."""
    p = initial.p_excited
    e = proto.ctx.e0
    for step in proto.steps:
        if isinstance(step, PartialThermalization):
            p = (1.0 - step.lam) * p + step.lam * gibbs_population(e, proto.ctx)
        elif isinstance(step, LevelTransformation):
            e += step.delta_e
        else:
            p = (1.0 - step.gamma) * p + step.gamma * (1.0 - p)
    return QubitState(p)


def _run_dp(proto: Protocol, initial: QubitState, atom_cap: int):
    # Parallel arrays: works[i] with mass (unocc[i], occ[i]).
    works = np.array([0.0])
    unocc = np.array([1.0 - initial.p_excited])
    occ = np.array([initial.p_excited])
    e = proto.ctx.e0

    def _compact():
        nonlocal works, unocc, occ
        order = np.argsort(works)
        works, unocc, occ = works[order], unocc[order], occ[order]
        group = np.concatenate(([0], np.cumsum(np.diff(works) >= MERGE_TOL)))
        n = group[-1] + 1
        new_u = np.zeros(n)
        new_o = np.zeros(n)
        new_w = np.zeros(n)
        np.add.at(new_u, group, unocc)
        np.add.at(new_o, group, occ)
        np.add.at(new_w, group, works * (unocc + occ))
        mass = new_u + new_o
        first = np.zeros(n)
        first[group[::-1]] = works[::-1]
        new_w = np.where(mass > 0, new_w / np.maximum(mass, 1e-300), first)
        works, unocc, occ = new_w, new_u, new_o

    for step in proto.steps:
        if isinstance(step, PartialThermalization):
            g = gibbs_population(e, proto.ctx)
            lam = step.lam
            total = unocc + occ
            unocc = (1.0 - lam) * unocc + lam * (1.0 - g) * total
            occ = (1.0 - lam) * occ + lam * g * total
        elif isinstance(step, BistochasticTransformation):
            gam = step.gamma
            unocc, occ = (
                (1.0 - gam) * unocc + gam * occ,
                (1.0 - gam) * occ + gam * unocc,
            )
        else:
            e += step.delta_e
            if step.delta_e != 0.0:
                # Occupied mass pays work -delta_e; unoccupied stays put.
                works = np.concatenate([works, works - step.delta_e])
                unocc = np.concatenate([unocc, np.zeros_like(occ)])
                occ = np.concatenate([np.zeros_like(occ), occ])
                _compact()
                if len(works) > atom_cap:
                    raise ResourceError(
                        f"work support exceeds {atom_cap} atoms; "
                        "use monte_carlo for this protocol"
                    )
    return works, unocc, occ


def exact_work_distribution(
    proto: Protocol, initial: QubitState, atom_cap: int = ATOM_CAP
) -> WorkDistribution:
    """Exact law of the total work by dynamic programming.

    DP state: for each distinct accumulated work value, the probability
    mass split by current occupation.  Thermalizations and swaps mix the
    occupation components in place; only level shifts move mass between
    work values (the occupied component pays -delta_e)."""
    works, unocc, occ = _run_dp(proto, initial, atom_cap)
    return WorkDistribution.from_atoms(works, unocc + occ)


def dp_final_occupation(proto: Protocol, initial: QubitState) -> float:
    """Occupation marginal of the exact DP, for cross-checking final_state."""
    _, _, occ = _run_dp(proto, initial, ATOM_CAP)
    return float(occ.sum())


def brute_force_work_distribution(
    proto: Protocol, initial: QubitState
) -> WorkDistribution:
    """Independent oracle: exhaustively enumerate every resolved outcome of
    every random choice, with no DP merging along the way."""
    branching = sum(
        1
        for s in proto.steps
        if isinstance(s, (PartialThermalization, BistochasticTransformation))
    )
    if branching > BRUTE_FORCE_MAX_BRANCHES:
        raise ResourceError(
            f"{branching} branching steps exceed the exhaustive limit of "
            f"{BRUTE_FORCE_MAX_BRANCHES}"
        )
    energies = proto.energy_trajectory()
    results: list[tuple[float, float]] = []

    def recurse(i: int, occupied: bool, prob: float, work: float):
        if prob == 0.0:
            return
        if i == len(proto.steps):
            results.append((work, prob))
            return
        step = proto.steps[i]
        if isinstance(step, LevelTransformation):
            w = work - step.delta_e if occupied else work
            recurse(i + 1, occupied, prob, w)
        elif isinstance(step, PartialThermalization):
            g = gibbs_population(energies[i], proto.ctx)
            recurse(i + 1, occupied, prob * (1.0 - step.lam), work)
            recurse(i + 1, True, prob * step.lam * g, work)
            recurse(i + 1, False, prob * step.lam * (1.0 - g), work)
        else:
            recurse(i + 1, occupied, prob * (1.0 - step.gamma), work)
            recurse(i + 1, not occupied, prob * step.gamma, work)

    p0 = initial.p_excited
    recurse(0, True, p0, 0.0)
    recurse(0, False, 1.0 - p0, 0.0)
    values = np.array([w for w, _ in results])
    probs = np.array([p for _, p in results])
    return WorkDistribution.from_atoms(values, probs)


# Fixed chunk size so aggregate Monte Carlo results do not depend on how
# chunks are scheduled across workers.
_MC_CHUNK = 65536


@dataclass(frozen=True)
class MonteCarloResult:
    distribution: WorkDistribution
    final_p_excited: float
    n_samples: int

    @property
    def mean_std_error(self) -> float:
        d = self.distribution
        return math.sqrt(d.variance / self.n_samples)


def monte_carlo(
    proto: Protocol, initial: QubitState, n_samples: int, seed: int
) -> MonteCarloResult:
    """Sampled work law and final-state estimate.

    Counter-based streams: chunk c of a run draws from Philox(seed) jumped
    c times, and every sample consumes a fixed number of uniforms, so the
    result is a pure function of (seed, n_samples)."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    # Fixed draw layout: one uniform for the initial occupation, two per
    # thermalization (thermalize? then fresh occupation), one per swap.
    draw_cols = 1 + sum(
        2 if isinstance(s, PartialThermalization) else 1
        for s in proto.steps
        if not isinstance(s, LevelTransformation)
    )
    energies = proto.energy_trajectory()

    all_values = []
    all_counts = []
    occupied_total = 0
    base = np.random.Philox(key=seed)
    for chunk_index, start in enumerate(range(0, n_samples, _MC_CHUNK)):
        m = min(_MC_CHUNK, n_samples - start)
        rng = np.random.Generator(base.jumped(chunk_index))
        u = rng.random((m, draw_cols))
        col = 0
        occupied = u[:, col] < initial.p_excited
        col += 1
        work = np.zeros(m)
        for i, step in enumerate(proto.steps):
            if isinstance(step, LevelTransformation):
                work -= np.where(occupied, step.delta_e, 0.0)
            elif isinstance(step, PartialThermalization):
                g = gibbs_population(energies[i], proto.ctx)
                therm = u[:, col] < step.lam
                fresh = u[:, col + 1] < g
                occupied = np.where(therm, fresh, occupied)
                col += 2
            else:
                flip = u[:, col] < step.gamma
                occupied = occupied ^ flip
                col += 1
        occupied_total += int(occupied.sum())
        values, counts = np.unique(work, return_counts=True)
        all_values.append(values)
        all_counts.append(counts.astype(float))
    values = np.concatenate(all_values)
    probs = np.concatenate(all_counts) / n_samples
    dist = WorkDistribution.from_atoms(values, probs)
    return MonteCarloResult(dist, occupied_total / n_samples, n_samples)
