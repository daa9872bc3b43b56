"""Leggett-Garg inequality ``1 + K13 >= K12 + K23`` and its margin."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .distribution import CELLS, JointDistribution
from .spinflip import CorrelationTriple, theoretical_intrinsic


class LgiSource(enum.Enum):
    FROM_CORRELATIONS = "FromCorrelations"
    FROM_QUASI_DISTRIBUTION = "FromQuasiDistribution"


@dataclass(frozen=True)
class LgiReport:
    """Outcome of one inequality evaluation.

    ``margin = lhs - rhs`` equals four times the (-1, +1) cell of the
    associated joint distribution. ``cell_negative`` flags each cell; a
    negative cell is the violation of the corresponding sign-permuted
    inequality.
    """

    lhs: float
    rhs: float
    margin: float
    violated: bool
    negative_cell: tuple | None
    negative_value: float | None
    source: LgiSource
    cell_negative: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
            "negative_cell": list(self.negative_cell) if self.negative_cell else None,
            "negative_value": self.negative_value,
            "source": self.source.value,
            "cell_negative": {f"{a:+d},{b:+d}": flag for (a, b), flag in self.cell_negative.items()},
        }


def _report(k12, k13, k23, p: JointDistribution, source: LgiSource) -> LgiReport:
    lhs = 1.0 + k13
    rhs = k12 + k23
    margin = 4.0 * p[(-1, 1)]
    flags = {c: bool(v < 0) for c, v in zip(CELLS, p.values)}
    worst = min(CELLS, key=lambda c: p[c])
    if p[worst] < 0:
        negative_cell, negative_value = worst, p[worst]
    else:
        negative_cell = negative_value = None
    return LgiReport(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        violated=margin < 0,
        negative_cell=negative_cell,
        negative_value=negative_value,
        source=source,
        cell_negative=flags,
    )


def evaluate_from_correlations(k: CorrelationTriple) -> LgiReport:
    p = theoretical_intrinsic(k)
    return _report(k.k12, k.k13, k.k23, p, LgiSource.FROM_CORRELATIONS)


def evaluate_from_distribution(p: JointDistribution) -> LgiReport:
    """Read the correlations off ``p`` as its moments (s1 = +1 convention)."""
    return _report(p.mean_s2(), p.mean_s3(), p.mean_s2s3(), p, LgiSource.FROM_QUASI_DISTRIBUTION)
