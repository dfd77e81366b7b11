"""Time-directed information measures on MVAR models.

Every measure here reduces to residual variances of a single variable's
present given some set of pasts, computed exactly from the model's
autocovariances.  Pasts are either a finite number of lags or the whole
past, approximated by lag-doubling truncation to a relative tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .errors import ValidationError
from .gaussian import InfoUnit, InfoValue, info_value
from .mvar import (
    MvarModel,
    conditional_variance,
    history_covariance,
    infinite_past_conditional_variance,
    stationary_covariance,
)
from .pid import GaussianTriplet, PidResult, mmi_pid, pid_from_informations


@dataclass(frozen=True)
class InfiniteLags:
    """Whole-past conditioning, truncated once successive lag doublings agree to ``tol``."""

    tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.tol <= 1e-4:
            raise ValidationError(f"infinite-lag tolerance {self.tol} must lie in (0, 1e-4]")

    def __str__(self):
        return "inf"


def parse_lags(value, tol: float = 1e-10) -> int | InfiniteLags:
    """Accept a positive int, or 'inf' / math.inf / None for the infinite past."""
    if isinstance(value, InfiniteLags):
        return value
    if value is None or (isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "infinity")):
        return InfiniteLags(tol)
    if isinstance(value, float) and math.isinf(value):
        return InfiniteLags(tol)
    try:
        lags = int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"lags must be a positive integer or 'inf', got {value!r}") from None
    if lags < 1 or lags != float(value):
        raise ValidationError(f"lags must be a positive integer or 'inf', got {value!r}")
    return lags


def residual_variance(m: MvarModel, target, conditioning: Iterable, lags) -> tuple[float, int]:
    """Var(target_t | pasts of ``conditioning``) and the number of lags actually used."""
    lags = parse_lags(lags)
    conditioning = list(conditioning)
    if isinstance(lags, InfiniteLags):
        return infinite_past_conditional_variance(m, target, conditioning, lags.tol)
    if not conditioning:
        return conditional_variance(m, target, [], lags), 0
    return conditional_variance(m, target, conditioning, lags), lags


@dataclass(frozen=True)
class FlowQuery:
    model: MvarModel
    source: int | str
    target: int | str
    conditionals: tuple = ()
    lags: object = 1
    unit: InfoUnit = InfoUnit.NATS
    # finite mode only: length of the target's own history when it differs from ``lags``
    target_lags: int | None = None

    def __post_init__(self):
        m = self.model
        src, tgt = m.index(self.source), m.index(self.target)
        cond = tuple(sorted({m.index(v) for v in self.conditionals}))
        if src == tgt:
            raise ValidationError("source and target must differ")
        if src in cond or tgt in cond:
            raise ValidationError("conditionals must exclude source and target")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "conditionals", cond)
        object.__setattr__(self, "lags", parse_lags(self.lags))
        object.__setattr__(self, "unit", InfoUnit.parse(self.unit))
        if self.target_lags is not None and isinstance(self.lags, InfiniteLags):
            raise ValidationError("target_lags only applies to finite lags")

    def _variances(self) -> tuple[float, float, int]:
        m = self.model
        if self.target_lags is not None:
            base = {self.target: self.target_lags, **{c: self.lags for c in self.conditionals}}
            full = {**base, self.source: self.lags}
            used = max(full.values())
            return conditional_variance(m, self.target, base), conditional_variance(m, self.target, full), used
        restricted = [self.target, *self.conditionals]
        v0, l0 = residual_variance(m, self.target, restricted, self.lags)
        v1, l1 = residual_variance(m, self.target, restricted + [self.source], self.lags)
        return v0, v1, max(l0, l1)


def transfer_entropy(q: FlowQuery) -> InfoValue:
    """Half the log-ratio of the target's residual variance without and with the source's past."""
    v0, v1, used = q._variances()
    return info_value(0.5 * math.log(v0 / v1), q.unit, lags_used=used, what="transfer entropy")


def conditional_transfer_entropy(q: FlowQuery) -> InfoValue:
    if not q.conditionals:
        raise ValidationError("conditional transfer entropy needs at least one conditioning variable")
    return transfer_entropy(q)


def granger_causality(q: FlowQuery) -> InfoValue:
    """log of restricted over full residual variance; twice the transfer entropy in nats."""
    v0, v1, used = q._variances()
    return info_value(math.log(v0 / v1), q.unit, lags_used=used, what="Granger causality")


def lagged_mutual_information(m: MvarModel, source, target, lags=1,
                              unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    """I(target_t ; past of source); the source may be the target itself."""
    t = m.index(target)
    var = stationary_covariance(m).data[t, t]
    v, used = residual_variance(m, t, [m.index(source)], lags)
    return info_value(0.5 * math.log(var / v), unit, lags_used=used, what="lagged mutual information")


def dynamic_mmi_pid(m: MvarModel, target, source_a, source_b, lags=1,
                    unit: InfoUnit | str = InfoUnit.NATS) -> PidResult:
    """MMI decomposition of the information the pasts of two variables carry about target_t.

    Either source may be the target itself (its own past).
    """
    t, a, b = m.index(target), m.index(source_a), m.index(source_b)
    if a == b:
        raise ValidationError("the two sources must be different variables")
    lags = parse_lags(lags)
    if isinstance(lags, InfiniteLags):
        var = stationary_covariance(m).data[t, t]
        va, la = residual_variance(m, t, [a], lags)
        vb, lb = residual_variance(m, t, [b], lags)
        vab, lab = residual_variance(m, t, [a, b], lags)
        return pid_from_informations(0.5 * math.log(var / va), 0.5 * math.log(var / vb),
                                     0.5 * math.log(var / vab), unit, lags_used=max(la, lb, lab))
    variables = sorted({t, a, b})
    h = history_covariance(m, lags, variables)
    lab = m.labels
    triplet = GaussianTriplet(h.joint, (h.index(lab[t], 0),), h.past(lab[a]), h.past(lab[b]))
    res = mmi_pid(triplet, unit)
    return _with_lags(res, lags)


def _with_lags(res: PidResult, lags: int) -> PidResult:
    fields = {name: replace(getattr(res, name), lags_used=lags)
              for name in ("redundancy", "unique_source1", "unique_source2", "synergy",
                           "mi_source1", "mi_source2", "mi_joint", "wms")}
    return replace(res, lags_used=lags, **fields)

