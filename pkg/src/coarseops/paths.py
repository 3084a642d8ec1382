"""Resolved-branch (path) formalism.

A protocol is a weighted mixture of paths: one path per assignment of each
thermalization to {identity, fresh Gibbs draw} and each swap to {identity,
flip}.  A path records the level-shift increments between those choices.
Increments are stored as one list of length k+1 for k tags: increment i
happens before tag i, and the final entry is the trailing shift after the
last tag (zero when there is none), so a shrunk path carries no identity
tags at all.

Stages: I up to and including the first Gibbs tag, II until the last Gibbs
tag, III after it.  Stage free-energy changes are Gibbs-curve integrals
over the corresponding energy windows.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from coarseops.engine import MERGE_TOL, WorkDistribution
from coarseops.protocol import (
    BistochasticTransformation,
    LevelTransformation,
    PartialThermalization,
    Protocol,
)
from coarseops.thermo import (
    QubitState,
    ThermalContext,
    energy_of_population,
    gibbs_integral,
    gibbs_population,
    partition_function,
)

ENUMERATION_MAX_BRANCHES = 24


class Tag(enum.Enum):
    IDENTITY = "I"
    GIBBS = "G"
    SWAP = "S"


@dataclass(frozen=True)
class Path:
    """One resolved branch: k tags with k+1 surrounding increments."""

    increments: tuple[float, ...]
    tags: tuple[Tag, ...]
    weight: float
    ctx: ThermalContext
    start_energy: float

    def __post_init__(self):
        if len(self.increments) != len(self.tags) + 1:
            raise ValueError(
                "a path with k tags needs k+1 increments "
                f"(got {len(self.increments)} and {len(self.tags)})"
            )

    def tag_energies(self) -> list[float]:
        """Energy gap at each tag."""
        out = []
        e = self.start_energy
        for inc, _ in zip(self.increments, self.tags):
            e += inc
            out.append(e)
        return out

    @property
    def end_energy(self) -> float:
        return self.start_energy + sum(self.increments)


def enumerate_paths(proto: Protocol, skip_zero_weight: bool = True) -> list[Path]:
    """All resolved branches of a protocol with their probabilities.

    Each thermalization resolves to IDENTITY (weight 1-lambda) or GIBBS
    (lambda); each swap to IDENTITY (1-gamma) or SWAP (gamma).  Weights of
    the full enumeration sum to 1."""
    branch_steps = [
        s for s in proto.steps if not isinstance(s, LevelTransformation)
    ]
    if len(branch_steps) > ENUMERATION_MAX_BRANCHES:
        raise ValueError(
            f"{len(branch_steps)} branching steps exceed the enumeration "
            f"limit of {ENUMERATION_MAX_BRANCHES}"
        )
    paths = []
    for picks in itertools.product((False, True), repeat=len(branch_steps)):
        weight = 1.0
        tags: list[Tag] = []
        increments: list[float] = []
        pending = 0.0
        it = iter(picks)
        for step in proto.steps:
            if isinstance(step, LevelTransformation):
                pending += step.delta_e
                continue
            taken = next(it)
            if isinstance(step, PartialThermalization):
                weight *= step.lam if taken else (1.0 - step.lam)
                tag = Tag.GIBBS if taken else Tag.IDENTITY
            else:
                weight *= step.gamma if taken else (1.0 - step.gamma)
                tag = Tag.SWAP if taken else Tag.IDENTITY
            increments.append(pending)
            pending = 0.0
            tags.append(tag)
        increments.append(pending)
        if skip_zero_weight and weight == 0.0:
            continue
        paths.append(
            Path(tuple(increments), tuple(tags), weight, proto.ctx, proto.ctx.e0)
        )
    return paths


def shrink(path: Path) -> Path:
    """Canonical form: identity tags removed (their surrounding increments
    glued), and adjacent swap pairs with zero net increment in between
    cancelled (a swap is an involution).  The conditional work law is
    unchanged."""
    increments = list(path.increments)
    tags = list(path.tags)
    # Remove identity tags, merging the increment before the tag into the
    # increment after it.
    i = 0
    while i < len(tags):
        if tags[i] is Tag.IDENTITY:
            increments[i + 1] += increments[i]
            del increments[i]
            del tags[i]
        else:
            i += 1
    # Cancel S,S pairs separated by zero net shift.
    changed = True
    while changed:
        changed = False
        for i in range(len(tags) - 1):
            if (
                tags[i] is Tag.SWAP
                and tags[i + 1] is Tag.SWAP
                and abs(increments[i + 1]) < MERGE_TOL
            ):
                increments[i + 2] += increments[i + 1] + increments[i]
                del increments[i : i + 2]
                del tags[i : i + 2]
                changed = True
                break
    return Path(tuple(increments), tuple(tags), path.weight, path.ctx,
                path.start_energy)


@dataclass(frozen=True)
class StageDecomposition:
    stage1: Path
    stage2: Path
    stage3: Path
    e_a: float
    e_b: float

    @property
    def delta_f_1(self) -> float:
        ctx = self.stage1.ctx
        return gibbs_integral(self.stage1.start_energy, self.e_a, ctx)

    @property
    def delta_f_2(self) -> float:
        return gibbs_integral(self.e_a, self.e_b, self.stage1.ctx)

    @property
    def delta_f_3(self) -> float:
        return gibbs_integral(self.e_b, self.stage3.end_energy, self.stage1.ctx)


def decompose_stages(path: Path) -> StageDecomposition:
    """Split at the first and last Gibbs tags.  Paths with no Gibbs tag are
    all stage I."""
    gibbs_at = [i for i, t in enumerate(path.tags) if t is Tag.GIBBS]
    energies = path.tag_energies()
    w, ctx, e0 = path.weight, path.ctx, path.start_energy
    if not gibbs_at:
        empty_at = Path((0.0,), (), w, ctx, path.end_energy)
        return StageDecomposition(path, empty_at, empty_at,
                                  path.end_energy, path.end_energy)
    first, last = gibbs_at[0], gibbs_at[-1]
    e_a, e_b = energies[first], energies[last]
    stage1 = Path(
        tuple(path.increments[: first + 1]) + (0.0,),
        tuple(path.tags[: first + 1]),
        w, ctx, e0,
    )
    stage2 = Path(
        tuple(path.increments[first + 1 : last + 1]) + (0.0,),
        tuple(path.tags[first + 1 : last + 1]),
        w, ctx, e_a,
    )
    stage3 = Path(
        tuple(path.increments[last + 1 :]),
        tuple(path.tags[last + 1 :]),
        w, ctx, e_b,
    )
    return StageDecomposition(stage1, stage2, stage3, e_a, e_b)


@dataclass(frozen=True)
class Segment:
    index: int
    e_from: float
    e_to: float
    level: float
    tag: str
    area: float
    in_stage2: bool


@dataclass(frozen=True)
class AreaReport:
    total: float
    segments: tuple[Segment, ...]

    def to_csv(self) -> str:
        lines = ["segment,e_from,e_to,level_q,tag,area"]
        for s in self.segments:
            lines.append(
                f"{s.index},{s.e_from:.17g},{s.e_to:.17g},"
                f"{s.level:.17g},{s.tag},{s.area:.17g}"
            )
        return "\n".join(lines) + "\n"


def area_between(path: Path, initial_level: float = math.nan) -> AreaReport:
    """Per-segment areas between the path's horizontal segments and the
    Gibbs curve, in closed form.  The total is over stage-II segments (the
    only ones the variance bound uses); stage-I segments need the initial
    occupation, which may be unknown (NaN level, NaN area)."""
    ctx = path.ctx
    gibbs_at = [i for i, t in enumerate(path.tags) if t is Tag.GIBBS]
    first = gibbs_at[0] if gibbs_at else len(path.tags)
    last = gibbs_at[-1] if gibbs_at else -1
    segments = []
    total = 0.0
    level = initial_level
    e = path.start_energy
    for i, (inc, tag) in enumerate(
        itertools.zip_longest(path.increments, path.tags, fillvalue=None)
    ):
        e_from, e_to = e, e + inc
        e = e_to
        if math.isnan(level):
            area = math.nan
        else:
            area = abs(
                gibbs_integral(e_from, e_to, ctx) - level * (e_to - e_from)
            )
        # Stage II spans the segments after the first Gibbs tag up to and
        # including the one ending at the last Gibbs tag.
        in_stage2 = first < i <= last
        if in_stage2:
            total += area
        segments.append(
            Segment(i, e_from, e_to, level,
                    tag.value if tag is not None else "end", area, in_stage2)
        )
        if tag is Tag.GIBBS:
            level = gibbs_population(e_to, ctx)
        elif tag is Tag.SWAP:
            level = 1.0 - level if not math.isnan(level) else math.nan
    return AreaReport(total, tuple(segments))


def path_work_distribution(path: Path, initial: QubitState) -> WorkDistribution:
    """Exact work law conditional on this resolved path.

    The occupation starts Bernoulli(initial), redraws from the Gibbs
    population at each Gibbs tag, and flips at each swap tag; every
    increment charges work -delta_e on the occupied branch."""
    # Map work value -> (unoccupied mass, occupied mass).
    state = {0.0: (1.0 - initial.p_excited, initial.p_excited)}
    e = path.start_energy
    for inc, tag in itertools.zip_longest(
        path.increments, path.tags, fillvalue=None
    ):
        e += inc
        if inc != 0.0:
            new: dict[float, tuple[float, float]] = {}
            for w, (u, o) in state.items():
                nu, no = new.get(w, (0.0, 0.0))
                new[w] = (nu + u, no)
                w2 = w - inc
                nu, no = new.get(w2, (0.0, 0.0))
                new[w2] = (nu, no + o)
            state = new
        if tag is Tag.GIBBS:
            g = gibbs_population(e, path.ctx)
            state = {
                w: ((u + o) * (1.0 - g), (u + o) * g) for w, (u, o) in state.items()
            }
        elif tag is Tag.SWAP:
            state = {w: (o, u) for w, (u, o) in state.items()}
    values = np.array(list(state.keys()))
    probs = np.array([u + o for u, o in state.values()])
    return WorkDistribution.from_atoms(values, probs)


def path_final_state(path: Path, initial: QubitState) -> QubitState:
    """Occupation law at the end of the resolved path."""
    p = initial.p_excited
    e = path.start_energy
    for inc, tag in zip(path.increments, path.tags):
        e += inc
        if tag is Tag.GIBBS:
            p = gibbs_population(e, path.ctx)
        elif tag is Tag.SWAP:
            p = 1.0 - p
    return QubitState(p)


def epsilon_iii(q_out: float, ctx: ThermalContext) -> float:
    """Guaranteed stage-III work-loss margin for an endpoint level above the
    boundary thermal population: strictly positive for q_out > p_beta and
    zero at q_out = p_beta."""
    if not 0.0 < q_out < 1.0:
        raise ValueError(f"q_out must lie strictly in (0, 1), got {q_out}")
    e_q = energy_of_population(q_out, ctx)
    log_term = math.log(
        partition_function(ctx.e0, ctx) / partition_function(e_q, ctx)
    ) / ctx.beta
    return -e_q + ctx.e0 + log_term


def epsilon_iii_tilde(q_out: float, ctx: ThermalContext) -> float:
    """Mirror margin for an endpoint level below the boundary thermal
    population: strictly positive for q_out < p_beta."""
    if not 0.0 < q_out < 1.0:
        raise ValueError(f"q_out must lie strictly in (0, 1), got {q_out}")
    e_q = energy_of_population(q_out, ctx)
    log_term = math.log(
        partition_function(ctx.e0, ctx) / partition_function(e_q, ctx)
    ) / ctx.beta
    return e_q - ctx.e0 + log_term
