"""System-level complexity measures built from information flows.

All three measures reduce to residual variances Var(M_i,t | pasts of a
subset of variables).  A :class:`_VarianceCache` shares those between
measures so a full report never solves the same regression twice.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

from .errors import ValidationError
from .flows import parse_lags, residual_variance
from .gaussian import InfoUnit, InfoValue, clamp_information, info_value
from .mvar import MvarModel, stationary_covariance
from .pid import pid_from_informations


@dataclass(frozen=True)
class Term:
    """One contribution to an aggregate measure (nats, before averaging)."""

    measure: str
    target: int
    sources: tuple[int, ...]
    value: float
    lags_used: int

    def to_dict(self, labels) -> dict:
        return {"measure": self.measure, "target": labels[self.target],
                "sources": [labels[s] for s in self.sources],
                "value_nats": self.value, "lags_used": self.lags_used}


@dataclass(frozen=True)
class Measure:
    value: InfoValue
    terms: tuple[Term, ...]
    weight: float

    def recomputed(self) -> float:
        """Aggregate rebuilt from the term table, in nats."""
        return self.weight * math.fsum(t.value for t in self.terms)


class _VarianceCache:
    def __init__(self, m: MvarModel, lags, workers: int = 1):
        self.m = m
        self.lags = parse_lags(lags)
        self.workers = workers
        self._store: dict[tuple[int, frozenset], tuple[float, int]] = {}

    def prefetch(self, keys) -> None:
        todo = sorted({(t, frozenset(c)) for t, c in keys} - self._store.keys(),
                      key=lambda k: (k[0], sorted(k[1])))
        if self.workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                results = list(pool.map(lambda k: self._compute(*k), todo))
        else:
            results = [self._compute(*k) for k in todo]
        self._store.update(zip(todo, results))

    def _compute(self, t: int, cond: frozenset) -> tuple[float, int]:
        return residual_variance(self.m, t, sorted(cond), self.lags)

    def __call__(self, t: int, cond) -> tuple[float, int]:
        key = (t, frozenset(cond))
        if key not in self._store:
            self._store[key] = self._compute(*key)
        return self._store[key]


def _require_vars(m: MvarModel, n_min: int, what: str) -> None:
    if m.k < n_min:
        raise ValidationError(f"{what} needs at least {n_min} variables, model has {m.k}")


def _measure(terms: list[Term], weight: float, unit, what: str) -> Measure:
    total = weight * math.fsum(t.value for t in terms)
    used = max((t.lags_used for t in terms), default=0)
    return Measure(info_value(total, unit, lags_used=used, what=what), tuple(terms), weight)


def _causal_density(cache: _VarianceCache, unit) -> Measure:
    n = cache.m.k
    everyone = set(range(n))
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    cache.prefetch([(i, everyone - {j}) for i, j in pairs] + [(i, everyone) for i in range(n)])
    terms = []
    for i, j in pairs:
        v0, l0 = cache(i, everyone - {j})
        v1, l1 = cache(i, everyone)
        f = clamp_information(math.log(v0 / v1), "conditional Granger causality")
        terms.append(Term("causal_density", i, (j,), f, max(l0, l1)))
    return _measure(terms, 1.0 / (n * (n - 1)), unit, "causal density")


def _global_te(cache: _VarianceCache, unit) -> Measure:
    n = cache.m.k
    everyone = set(range(n))
    cache.prefetch([(i, {i}) for i in range(n)] + [(i, everyone) for i in range(n)])
    terms = []
    for i in range(n):
        v_self, l0 = cache(i, {i})
        v_all, l1 = cache(i, everyone)
        te = clamp_information(0.5 * math.log(v_self / v_all), "global transfer entropy term")
        terms.append(Term("global_te", i, tuple(range(n)), te, max(l0, l1)))
    return _measure(terms, 1.0 / n, unit, "global transfer entropy")


def _synergistic_complexity(cache: _VarianceCache, unit) -> Measure:
    n = cache.m.k
    triples = [(i, j, k) for i in range(n) for j, k in combinations(range(n), 2) if i not in (j, k)]
    keys = []
    for i, j, k in triples:
        keys += [(i, {j}), (i, {k}), (i, {j, k})]
    cache.prefetch(keys)
    sigma = stationary_covariance(cache.m).data
    terms = []
    for i, j, k in triples:
        var = sigma[i, i]
        vj, lj = cache(i, {j})
        vk, lk = cache(i, {k})
        vjk, ljk = cache(i, {j, k})
        pid = pid_from_informations(0.5 * math.log(var / vj), 0.5 * math.log(var / vk),
                                    0.5 * math.log(var / vjk))
        terms.append(Term("synergistic_complexity", i, (j, k), pid.synergy.value, max(lj, lk, ljk)))
    return _measure(terms, 2.0 / (n * (n - 1) * (n - 2)), unit, "synergistic complexity")


def causal_density(m: MvarModel, lags=None, unit: InfoUnit | str = InfoUnit.NATS, workers: int = 1) -> Measure:
    """Mean conditional Granger causality over ordered pairs (infinite past by default)."""
    _require_vars(m, 2, "causal density")
    return _causal_density(_VarianceCache(m, lags, workers), unit)


def global_transfer_entropy(m: MvarModel, lags=None, unit: InfoUnit | str = InfoUnit.NATS,
                            workers: int = 1) -> Measure:
    """Mean over i of I(M_i,t ; M-past) - I(M_i,t ; M_i-past)."""
    _require_vars(m, 2, "global transfer entropy")
    return _global_te(_VarianceCache(m, lags, workers), unit)


def synergistic_complexity(m: MvarModel, lags=None, unit: InfoUnit | str = InfoUnit.NATS,
                           workers: int = 1) -> Measure:
    """Mean MMI synergy of pairs of pasts about a third variable's present."""
    _require_vars(m, 3, "synergistic complexity")
    return _synergistic_complexity(_VarianceCache(m, lags, workers), unit)


@dataclass(frozen=True)
class ComplexityReport:
    causal_density: InfoValue
    global_te: InfoValue
    synergistic_complexity: InfoValue | None
    n_vars: int
    per_pair_terms: tuple[Term, ...] = field(repr=False)
    lags: object
    labels: tuple[str, ...] = ()
    unit: InfoUnit = InfoUnit.NATS

    @property
    def lags_used(self) -> int:
        return max((t.lags_used for t in self.per_pair_terms), default=0)

    def to_dict(self) -> dict:
        sc = self.synergistic_complexity
        return {
            "n_vars": self.n_vars,
            "lags": str(self.lags),
            "causal_density": self.causal_density.value,
            "global_te": self.global_te.value,
            "synergistic_complexity": None if sc is None else sc.value,
            "per_pair_terms": [t.to_dict(self.labels) for t in self.per_pair_terms],
        }


def complexity_report(m: MvarModel, lags=None, unit: InfoUnit | str = InfoUnit.NATS,
                      workers: int = 1) -> ComplexityReport:
    """All three measures under one shared lag setting.

    Synergistic complexity is ``None`` for two-variable models.
    """
    _require_vars(m, 2, "a complexity report")
    unit = InfoUnit.parse(unit)
    cache = _VarianceCache(m, lags, workers)
    cd = _causal_density(cache, unit)
    gte = _global_te(cache, unit)
    sc = _synergistic_complexity(cache, unit) if m.k >= 3 else None
    terms = cd.terms + gte.terms + (sc.terms if sc else ())
    return ComplexityReport(cd.value, gte.value, sc.value if sc else None, m.k, terms,
                            cache.lags, m.labels, unit)

