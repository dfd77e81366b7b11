"""Net synergy and the minimum-mutual-information (MMI) PID for Gaussian triplets.

The MMI decomposition takes redundancy as the smaller of the two source-target
mutual informations.  For a univariate Gaussian target it is the only
decomposition whose redundant and unique parts depend on the pairwise
source-target marginals alone; ``gausspid.union`` checks that numerically.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyGrid, GaussPidError, UnsupportedTarget, ValidationError
from .gaussian import (
    CovarianceMatrix,
    InfoUnit,
    InfoValue,
    _disjoint,
    as_block,
    as_covariance,
    clamp_information,
    info_value,
    mi_nats,
    schur_complement,
)

TIE_TOL = 1e-12


class WeakerSource(str, Enum):
    SOURCE1 = "source1"
    SOURCE2 = "source2"
    TIE = "tie"


@dataclass(frozen=True)
class TripletSpec:
    """Unit-variance univariate triplet: a = corr(X,Y), b = corr(Y,Z), c = corr(X,Z)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not -1.0 < v < 1.0:
                raise ValidationError(f"{name} = {v} must lie in (-1, 1)")
        if self.determinant <= 0.0:
            raise ValidationError(
                f"(a, b, c) = ({self.a}, {self.b}, {self.c}) does not give a positive-definite covariance")

    @property
    def determinant(self) -> float:
        a, b, c = self.a, self.b, self.c
        return 1.0 - a * a - b * b - c * c + 2.0 * a * b * c

    @staticmethod
    def is_valid(a: float, b: float, c: float) -> bool:
        return (abs(a) < 1 and abs(b) < 1 and abs(c) < 1
                and 1.0 - a * a - b * b - c * c + 2.0 * a * b * c > 0.0)

    def b_interval(self) -> tuple[float, float]:
        return b_bounds(self.a, self.c)

    def covariance(self) -> np.ndarray:
        a, b, c = self.a, self.b, self.c
        return np.array([[1.0, a, c], [a, 1.0, b], [c, b, 1.0]])

    def triplet(self) -> "GaussianTriplet":
        joint = CovarianceMatrix(self.covariance(), ("X", "Y", "Z"))
        return GaussianTriplet(joint, (0,), (1,), (2,))


def b_bounds(a: float, c: float) -> tuple[float, float]:
    """Open interval of source correlations b giving a valid covariance."""
    r = math.sqrt((1 - a * a) * (1 - c * c))
    return a * c - r, a * c + r


@dataclass(frozen=True)
class GaussianTriplet:
    joint: CovarianceMatrix
    target: tuple[int, ...]
    source1: tuple[int, ...]
    source2: tuple[int, ...]

    def __post_init__(self):
        joint = as_covariance(self.joint)
        object.__setattr__(self, "joint", joint)
        for name in ("target", "source1", "source2"):
            object.__setattr__(self, name, as_block(getattr(self, name), joint.dim))
        _disjoint(self.target, self.source1, self.source2)

    def require_univariate_target(self) -> None:
        if len(self.target) != 1:
            raise UnsupportedTarget(
                f"MMI decomposition needs a univariate target, got dimension {len(self.target)}")

    def informations(self) -> tuple[float, float, float]:
        """Raw (I(X;Y), I(X;Z), I(X;Y,Z)) in nats."""
        s = self.joint.data
        return (mi_nats(s, self.target, self.source1),
                mi_nats(s, self.target, self.source2),
                mi_nats(s, self.target, self.source1 + self.source2))


@dataclass(frozen=True)
class PidResult:
    redundancy: InfoValue
    unique_source1: InfoValue
    unique_source2: InfoValue
    synergy: InfoValue
    mi_source1: InfoValue
    mi_source2: InfoValue
    mi_joint: InfoValue
    wms: InfoValue
    weaker_source: WeakerSource
    unit: InfoUnit = InfoUnit.NATS
    lags_used: int | None = None

    def to_dict(self) -> dict:
        out = {"method": "MMI-PID", "unit": self.unit.value, "lags_used": self.lags_used,
               "weaker_source": self.weaker_source.value}
        for name in ("redundancy", "unique_source1", "unique_source2", "synergy",
                     "mi_source1", "mi_source2", "mi_joint", "wms"):
            out[name] = getattr(self, name).value
        return out


def pid_from_informations(i1: float, i2: float, i12: float,
                          unit: InfoUnit | str = InfoUnit.NATS,
                          lags_used: int | None = None) -> PidResult:
    """Assemble the MMI decomposition from the three mutual informations (nats)."""
    unit = InfoUnit.parse(unit)
    i1 = clamp_information(i1, "I(X;Y)")
    i2 = clamp_information(i2, "I(X;Z)")
    i12 = clamp_information(i12, "I(X;Y,Z)")
    lo, hi = min(i1, i2), max(i1, i2)
    if abs(i1 - i2) < TIE_TOL:
        weaker = WeakerSource.TIE
    else:
        weaker = WeakerSource.SOURCE1 if i1 < i2 else WeakerSource.SOURCE2

    def wrap(v, clamp=True, what="information"):
        return info_value(v, unit, clamp=clamp, lags_used=lags_used, what=what)

    return PidResult(
        redundancy=wrap(lo),
        unique_source1=wrap(i1 - lo),
        unique_source2=wrap(i2 - lo),
        synergy=wrap(i12 - hi, what="MMI synergy"),
        mi_source1=wrap(i1),
        mi_source2=wrap(i2),
        mi_joint=wrap(i12),
        wms=wrap(i12 - i1 - i2, clamp=False),
        weaker_source=weaker,
        unit=unit,
        lags_used=lags_used,
    )


def _as_triplet(t) -> GaussianTriplet:
    if isinstance(t, TripletSpec):
        return t.triplet()
    return t


def net_synergy(t: GaussianTriplet | TripletSpec, unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    """Whole-minus-sum synergy I(X;Y,Z) - I(X;Y) - I(X;Z); negative means net redundancy."""
    i1, i2, i12 = _as_triplet(t).informations()
    return info_value(i12 - i1 - i2, unit, clamp=False)


def net_synergy_sigma(t: GaussianTriplet | TripletSpec) -> float:
    """Net synergy with information measured as reduction of target variance.

    The target is standardized to unit variance first, so the result is
    the dimensionless value for the correlation-form triplet.  This is not a
    Shannon quantity and is returned as a plain float.
    """
    t = _as_triplet(t)
    t.require_univariate_target()
    s = t.joint.data
    var_x = s[t.target[0], t.target[0]]

    def residual(block):
        return schur_complement(s, t.target, block)[0, 0] / var_x

    return float((1.0 - residual(t.source1 + t.source2))
                 - (1.0 - residual(t.source1))
                 - (1.0 - residual(t.source2)))


def mmi_pid(t: GaussianTriplet | TripletSpec, unit: InfoUnit | str = InfoUnit.NATS) -> PidResult:
    t = _as_triplet(t)
    t.require_univariate_target()
    return pid_from_informations(*t.informations(), unit=unit)


@dataclass(frozen=True)
class SweepRow:
    b: float
    wms: float
    wms_sigma: float
    redundancy: float
    unique_y: float
    unique_z: float
    synergy: float


@dataclass
class Sweep:
    a: float
    c: float
    unit: InfoUnit
    rows: list[SweepRow] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def as_records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


def _sweep_row(a: float, b: float, c: float, unit: InfoUnit) -> SweepRow:
    spec = TripletSpec(a, b, c)
    pid = mmi_pid(spec, unit)
    return SweepRow(b, pid.wms.value, net_synergy_sigma(spec), pid.redundancy.value,
                    pid.unique_source1.value, pid.unique_source2.value, pid.synergy.value)


def sweep_univariate(a: float, c: float, b_grid: Iterable[float],
                     unit: InfoUnit | str = InfoUnit.NATS) -> Sweep:
    """Evaluate WMS, WMS_sigma and the MMI PID along a grid of source correlations b.

    Grid points outside the valid region (or too close to its boundary to
    give a well-conditioned covariance) are skipped and listed in
    ``Sweep.skipped``.
    """
    unit = InfoUnit.parse(unit)
    out = Sweep(a, c, unit)
    for b in b_grid:
        b = float(b)
        if not TripletSpec.is_valid(a, b, c):
            out.skipped.append(b)
            continue
        try:
            out.rows.append(_sweep_row(a, b, c, unit))
        except GaussPidError:
            out.skipped.append(b)
    if not out.rows:
        raise EmptyGrid(f"no valid b in the grid for a={a}, c={c}")
    return out


def linear_grid(lo: float, hi: float, steps: int) -> Sequence[float]:
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    return np.linspace(lo, hi, steps).tolist()
