"""Gaussian information-theoretic primitives.

All quantities are computed in nats from covariance matrices; conversion to
bits happens once, when a value is wrapped for output.  Linear solves go
through Cholesky factors, never through explicit inverses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    NegativeInformation,
    NotPositiveDefinite,
    OverlappingBlocks,
    SingularBlock,
    ValidationError,
)

LN2 = math.log(2.0)
LOG_2PIE = math.log(2.0 * math.pi * math.e)

# information values below this are round-off and get clamped to zero
CLAMP_TOL = 1e-9
MAX_CONDITION = 1e12
_ASYMMETRY_TOL = 1e-8
_EIG_CHECK_MAX_DIM = 1000


class InfoUnit(str, Enum):
    NATS = "nats"
    BITS = "bits"

    @classmethod
    def parse(cls, unit: "InfoUnit | str") -> "InfoUnit":
        if isinstance(unit, cls):
            return unit
        try:
            return cls(str(unit).lower())
        except ValueError:
            raise ValidationError(f"unknown information unit {unit!r}") from None


@dataclass(frozen=True)
class InfoValue:
    """An information quantity tagged with its unit.

    ``lags_used`` is filled in by the time-series measures so that
    truncated infinite-past results can be audited.
    """

    value: float
    unit: InfoUnit = InfoUnit.NATS
    lags_used: int | None = None

    @property
    def nats(self) -> float:
        return self.value * LN2 if self.unit is InfoUnit.BITS else self.value

    def to(self, unit: InfoUnit | str) -> "InfoValue":
        unit = InfoUnit.parse(unit)
        if unit is self.unit:
            return self
        return InfoValue(to_unit(self.nats, unit), unit, self.lags_used)

    def __float__(self) -> float:
        return float(self.value)


def to_unit(nats: float, unit: InfoUnit | str) -> float:
    unit = InfoUnit.parse(unit)
    return nats / LN2 if unit is InfoUnit.BITS else nats


def clamp_information(nats: float, what: str = "information") -> float:
    """Clamp round-off negatives to zero; reject anything clearly negative."""
    if not math.isfinite(nats):
        raise NegativeInformation(f"{what} is not finite ({nats})")
    if nats < -CLAMP_TOL:
        raise NegativeInformation(f"{what} = {nats:.3e} nats is negative beyond round-off")
    return max(nats, 0.0)


def info_value(nats: float, unit: InfoUnit | str = InfoUnit.NATS, *,
               clamp: bool = True, lags_used: int | None = None,
               what: str = "information") -> InfoValue:
    if clamp:
        nats = clamp_information(nats, what)
    unit = InfoUnit.parse(unit)
    return InfoValue(to_unit(nats, unit), unit, lags_used)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric positive-definite covariance matrix.

    The input is symmetrized on construction.  Construction fails with
    ``NotPositiveDefinite`` when the smallest eigenvalue is not clearly
    positive or the condition number exceeds ``MAX_CONDITION``.
    """

    data: np.ndarray
    labels: tuple[str, ...] | None = None
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.data, dtype=float, copy=True)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValidationError(f"covariance must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("covariance contains non-finite entries")
        if not self._checked:
            scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
            if np.max(np.abs(a - a.T)) > _ASYMMETRY_TOL * scale:
                raise ValidationError("covariance matrix is not symmetric")
            a = 0.5 * (a + a.T)
            _check_positive_definite(a)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != a.shape[0]:
                raise ValidationError("labels length does not match covariance dimension")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def trusted(cls, data, labels=None) -> "CovarianceMatrix":
        """Wrap a matrix already known to be PD (principal submatrix, Schur complement)."""
        a = np.asarray(data, dtype=float)
        return cls(0.5 * (a + a.T), labels, _checked=True)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def block(self, rows: Sequence[int], cols: Sequence[int] | None = None) -> np.ndarray:
        cols = rows if cols is None else cols
        return self.data[np.ix_(list(rows), list(cols))]

    def subset(self, idx: Sequence[int]) -> "CovarianceMatrix":
        idx = list(idx)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return CovarianceMatrix.trusted(self.block(idx), labels)

    def correlation(self) -> "CovarianceMatrix":
        s = np.sqrt(np.diag(self.data))
        return CovarianceMatrix.trusted(self.data / np.outer(s, s), self.labels)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def _check_positive_definite(a: np.ndarray) -> None:
    n = a.shape[0]
    if n <= _EIG_CHECK_MAX_DIM:
        w = np.linalg.eigvalsh(a)
        lo, hi = w[0], w[-1]
        if hi <= 0 or lo <= n * np.finfo(float).eps * hi:
            raise NotPositiveDefinite(
                f"covariance is not positive definite (eigenvalues in [{lo:.3e}, {hi:.3e}])")
        if hi / lo > MAX_CONDITION:
            raise NotPositiveDefinite(f"covariance is near-singular (condition number {hi / lo:.3e})")
        return
    # large matrices: Cholesky plus a cheap lower bound on the condition number
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance is not positive definite (Cholesky failed)") from None
    d = np.diag(L) ** 2
    if d.max() / d.min() > MAX_CONDITION:
        raise NotPositiveDefinite("covariance is near-singular (Cholesky pivots span > 1e12)")


def as_covariance(cov, labels=None) -> CovarianceMatrix:
    if isinstance(cov, CovarianceMatrix):
        return cov
    return CovarianceMatrix(np.asarray(cov, dtype=float), labels)


def as_block(idx, dim: int) -> tuple[int, ...]:
    """Normalize a block index (int or sequence of ints) and validate it against ``dim``."""
    if isinstance(idx, (int, np.integer)):
        idx = (int(idx),)
    idx = tuple(int(i) for i in idx)
    if not idx:
        raise ValidationError("block index must be non-empty")
    if len(set(idx)) != len(idx):
        raise ValidationError(f"block index {idx} contains duplicates")
    if min(idx) < 0 or max(idx) >= dim:
        raise ValidationError(f"block index {idx} out of range for dimension {dim}")
    return idx


def _disjoint(*blocks: tuple[int, ...]) -> None:
    seen: set[int] = set()
    for b in blocks:
        if seen.intersection(b):
            raise OverlappingBlocks(f"blocks overlap on indices {sorted(seen.intersection(b))}")
        seen.update(b)


# -- raw numpy kernels (nats, no validation) -------------------------------

def logdet_pd(a: np.ndarray) -> float:
    """log det of a PD matrix from its Cholesky factor."""
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise SingularBlock("matrix is not positive definite (Cholesky failed)") from None
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def schur_complement(s: np.ndarray, x: Sequence[int], y: Sequence[int]) -> np.ndarray:
    """Sigma(X) - Sigma(X,Y) Sigma(Y)^-1 Sigma(Y,X) for index blocks of ``s``."""
    x = list(x)
    y = list(y)
    sxx = s[np.ix_(x, x)]
    if not y:
        return sxx.copy()
    sxy = s[np.ix_(x, y)]
    try:
        factor = sla.cho_factor(s[np.ix_(y, y)], lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularBlock("conditioning block is singular (Cholesky failed)") from None
    out = sxx - sxy @ sla.cho_solve(factor, sxy.T, check_finite=False)
    return 0.5 * (out + out.T)


def mi_nats(s: np.ndarray, x: Sequence[int], y: Sequence[int]) -> float:
    """Unclamped I(X;Y) in nats; bit-identical under swapping x and y."""
    x, y = tuple(x), tuple(y)
    if (len(x), x) > (len(y), y):
        x, y = y, x
    return 0.5 * (logdet_pd(s[np.ix_(x, x)]) - logdet_pd(schur_complement(s, x, y)))


# -- public operations ------------------------------------------------------

def partial_covariance(joint, x, y) -> CovarianceMatrix:
    """Residual covariance of block ``x`` after linear regression on block ``y``."""
    joint = as_covariance(joint)
    x = as_block(x, joint.dim)
    y = as_block(y, joint.dim)
    _disjoint(x, y)
    res = schur_complement(joint.data, x, y)
    labels = None if joint.labels is None else tuple(joint.labels[i] for i in x)
    return CovarianceMatrix.trusted(res, labels)


def gaussian_entropy(cov, unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    """Differential entropy of a Gaussian with covariance ``cov``."""
    cov = as_covariance(cov)
    h = 0.5 * logdet_pd(cov.data) + 0.5 * cov.dim * LOG_2PIE
    return info_value(h, unit, clamp=False)


def mutual_information(joint, x, y, unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    joint = as_covariance(joint)
    x = as_block(x, joint.dim)
    y = as_block(y, joint.dim)
    _disjoint(x, y)
    return info_value(mi_nats(joint.data, x, y), unit, what="mutual information")


def conditional_mutual_information(joint, x, y, z, unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    """I(X;Y|Z) by the chain rule, I(X;Y,Z) - I(X;Z)."""
    joint = as_covariance(joint)
    x = as_block(x, joint.dim)
    y = as_block(y, joint.dim)
    z = as_block(z, joint.dim)
    _disjoint(x, y, z)
    v = mi_nats(joint.data, x, y + z) - mi_nats(joint.data, x, z)
    return info_value(v, unit, what="conditional mutual information")
