"""Joint (quasi-)distributions over the outcome pairs ``(s2, s3)``."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Cell order used for every 4-vector in the package: pp, mp, pm, mm, i.e.
# (s2, s3) = (+1,+1), (-1,+1), (+1,-1), (-1,-1).
CELLS = ((1, 1), (-1, 1), (1, -1), (-1, -1))
CELL_LABELS = ("pp", "mp", "pm", "mm")
S2 = np.array([c[0] for c in CELLS], dtype=float)
S3 = np.array([c[1] for c in CELLS], dtype=float)

SUM_TOL = 1e-9
SIGN_TOL = 1e-12


class Flavor(enum.Enum):
    PROPER = "proper"
    QUASI = "quasi"


def cell_index(s2: int, s3: int) -> int:
    try:
        return CELLS.index((int(s2), int(s3)))
    except ValueError:
        raise KeyError(f"no outcome cell ({s2}, {s3})") from None


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Four-cell distribution, stored as a read-only vector in ``CELLS`` order.

    A ``PROPER`` distribution has non-negative cells. A ``QUASI`` one may have
    negative cells but each lies in [-1, 1]; round-off just outside that band
    is clamped, anything further raises.
    """

    values: np.ndarray
    flavor: Flavor = Flavor.PROPER

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape != (4,):
            raise ValueError(f"expected 4 cells, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite cell values {vals}")
        if abs(vals.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"cells sum to {vals.sum()!r}, expected 1")
        if self.flavor is Flavor.PROPER:
            if vals.min() < -SIGN_TOL:
                raise ValueError(f"proper distribution has negative cell {vals.min()!r}")
        else:
            if np.abs(vals).max() > 1.0 + SUM_TOL:
                raise ValueError(
                    f"quasi-probability {vals[np.argmax(np.abs(vals))]!r} outside [-1, 1]"
                )
            vals = np.clip(vals, -1.0, 1.0)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_mapping(cls, mapping, flavor=Flavor.PROPER) -> "JointDistribution":
        return cls(np.array([mapping[c] for c in CELLS], dtype=float), flavor)

    @classmethod
    def uniform(cls) -> "JointDistribution":
        return cls(np.full(4, 0.25))

    def __getitem__(self, cell) -> float:
        return float(self.values[cell_index(*cell)])

    def as_dict(self) -> dict:
        return {c: float(v) for c, v in zip(CELLS, self.values)}

    def mean_s2(self) -> float:
        return float(S2 @ self.values)

    def mean_s3(self) -> float:
        return float(S3 @ self.values)

    def mean_s2s3(self) -> float:
        return float((S2 * S3) @ self.values)

    def __repr__(self):
        cells = ", ".join(f"{lab}={v:.6g}" for lab, v in zip(CELL_LABELS, self.values))
        return f"JointDistribution({cells}, {self.flavor.value})"
