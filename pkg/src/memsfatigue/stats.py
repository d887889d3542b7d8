"""Population statistics and the before/after comparison.

Dispersion is the coefficient of variation in percent, using the n-1 sample
standard deviation. Sums go through ``math.fsum`` so results do not depend on
record order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .dut import AXES, Axis
from .measurement import Thresholds
from .records import Kind, MeasurementRecord, Stage

#: Below this |mean| the dispersion percentage is reported as undefined.
MEAN_FLOOR = 1e-12


@dataclass(frozen=True)
class StatsSummary:
    n: int
    mean: float
    sample_std: float | None
    dispersion_percent: float | None
    min: float
    max: float


def summarize(values: Sequence[float]) -> StatsSummary:
    """Mean, sample std (n-1), dispersion % and range of ``values``.

    Std and dispersion are ``None`` for a single value; dispersion is also
    ``None`` when the mean is effectively zero.
    """
    xs = [float(v) for v in values]
    n = len(xs)
    if n == 0:
        raise ValueError("cannot summarize an empty population")
    mean = math.fsum(xs) / n
    std = disp = None
    if n >= 2:
        std = math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / (n - 1))
        if abs(mean) >= MEAN_FLOOR:
            disp = 100.0 * std / abs(mean)
    return StatsSummary(n, mean, std, disp, min(xs), max(xs))


class Verdict(str, Enum):
    UNCHANGED = "unchanged"
    CHANGED = "changed"


@dataclass(frozen=True)
class ComparisonBlock:
    """Before/after statistics for one (axis, kind) population.

    ``threshold`` is the absolute limit on ``mean_delta`` in the kind's unit;
    for relative kinds it is the relative limit times |before mean|.
    """

    axis: Axis | None
    kind: Kind
    before: StatsSummary
    after: StatsSummary
    mean_delta: float
    threshold: float
    relative: bool
    verdict: Verdict
    before_values: tuple[tuple[str, float], ...] = ()
    after_values: tuple[tuple[str, float], ...] = ()

    @property
    def label(self) -> str:
        return f"{self.axis.value if self.axis else '-'} {self.kind.value}"


@dataclass(frozen=True)
class ComparisonReport:
    blocks: tuple[ComparisonBlock, ...]
    # stage -> axis -> dispersion / lowest-axis dispersion, resonance only
    homogeneity: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def block(self, axis, kind) -> ComparisonBlock:
        for b in self.blocks:
            if b.axis == axis and b.kind == Kind(kind):
                return b
        raise KeyError((axis, kind))

    @property
    def all_unchanged(self) -> bool:
        return all(b.verdict is Verdict.UNCHANGED for b in self.blocks)


class PopulationMismatchError(ValueError):
    pass


def split_stages(records: Iterable[MeasurementRecord]) -> tuple[list[MeasurementRecord], list[MeasurementRecord]]:
    """(before, after) records; mid-run checkpoints are dropped."""
    before, after = [], []
    for r in records:
        if r.phase.stage is Stage.BEFORE:
            before.append(r)
        elif r.phase.stage is Stage.AFTER:
            after.append(r)
    return before, after


def _group(records: Iterable[MeasurementRecord], label: str) -> dict:
    out: dict = defaultdict(dict)
    for r in records:
        pop = out[(r.axis, r.kind)]
        if r.specimen_id in pop:
            raise PopulationMismatchError(f"{label}: specimen {r.specimen_id} appears twice for {r.axis} {r.kind.value}")
        pop[r.specimen_id] = r.value
    return out


def _order(key):
    axis, kind = key
    return (list(Kind).index(kind), "" if axis is None else axis.value)


def homogeneity_ratios(dispersions: dict) -> dict:
    """Each axis's dispersion over the smallest one; ``None`` when undefined."""
    defined = {a: d for a, d in dispersions.items() if d is not None}
    if len(defined) != len(dispersions) or not defined:
        return {a: None for a in dispersions}
    low = min(defined.values())
    return {a: (d / low if low > 0 else None) for a, d in defined.items()}


def compare(
    before: Iterable[MeasurementRecord],
    after: Iterable[MeasurementRecord],
    thresholds: Thresholds | None = None,
    metadata: dict | None = None,
) -> ComparisonReport:
    """Pair before/after populations per (axis, kind) and judge each mean shift."""
    thresholds = thresholds or Thresholds()
    pre, post = _group(before, "before"), _group(after, "after")
    if not pre or not post:
        n_pre, n_post = sum(map(len, pre.values())), sum(map(len, post.values()))
        raise PopulationMismatchError(
            f"need both a before and an after population; got {n_pre} before and {n_post} after records"
        )
    if set(pre) != set(post):
        odd = sorted(set(pre) ^ set(post), key=_order)
        raise PopulationMismatchError(f"before/after cover different (axis, kind) sets: {odd}")
    blocks = []
    for key in sorted(pre, key=_order):
        axis, kind = key
        if set(pre[key]) != set(post[key]):
            raise PopulationMismatchError(f"{axis} {kind.value}: specimen sets differ: {sorted(set(pre[key]) ^ set(post[key]))}")
        ids = sorted(pre[key])
        b = summarize([pre[key][i] for i in ids])
        a = summarize([post[key][i] for i in ids])
        limit, relative = thresholds.limit(kind)
        threshold = limit * abs(b.mean) if relative else limit
        delta = a.mean - b.mean
        blocks.append(
            ComparisonBlock(
                axis=axis,
                kind=kind,
                before=b,
                after=a,
                mean_delta=delta,
                threshold=threshold,
                relative=relative,
                verdict=Verdict.UNCHANGED if abs(delta) <= threshold else Verdict.CHANGED,
                before_values=tuple((i, pre[key][i]) for i in ids),
                after_values=tuple((i, post[key][i]) for i in ids),
            )
        )
    homogeneity = {}
    for stage in ("before", "after"):
        disp = {
            blk.axis: getattr(blk, stage).dispersion_percent
            for blk in blocks
            if blk.kind is Kind.RESONANCE and blk.axis in AXES
        }
        if disp:
            homogeneity[stage] = homogeneity_ratios(disp)
    return ComparisonReport(tuple(blocks), homogeneity, dict(metadata or {}))
