"""Time-series data: CSV input/output, lagged covariance estimation and MVAR fitting.

This is the bridge from observed or simulated samples to the analytic
machinery: ``estimate_covariance`` returns the same ``HistoryCovariance``
type that ``mvar.history_covariance`` builds from a model, and
``fit_mvar`` returns an ``MvarModel``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NotPositiveDefinite, TooFewSamples, ValidationError
from .gaussian import CovarianceMatrix, InfoUnit, InfoValue, info_value, schur_complement
from .mvar import HistoryCovariance, MvarModel
from .pid import GaussianTriplet, PidResult, mmi_pid

log = logging.getLogger(__name__)

# columns whose correlation matrix has a smaller eigenvalue are treated as redundant
REDUNDANCY_EIG = 1e-8
LOADING_START = 1e-10
LOADING_CAP = 1e-6
UNIT_ROOT_MARGIN = 1e-3


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray
    labels: tuple[str, ...]
    demeaned: bool = False

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] == 0:
            raise ValidationError(f"samples must be a T x k matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("samples contain missing or non-finite values")
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != x.shape[1]:
            raise ValidationError(f"{len(labels)} labels for {x.shape[1]} columns")
        if len(set(labels)) != len(labels):
            raise ValidationError("column labels must be unique")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    def require_samples(self, lags: int) -> None:
        need = self.k * (lags + 1) + 10
        if self.n_samples <= need:
            raise TooFewSamples(
                f"{self.n_samples} samples is too few for {self.k} variables at {lags} lags (need > {need})")

    def demean(self) -> "Dataset":
        if self.demeaned:
            return self
        return Dataset(self.samples - self.samples.mean(axis=0), self.labels, True)

    def index(self, var) -> int:
        if isinstance(var, (int, np.integer)):
            if not 0 <= var < self.k:
                raise ValidationError(f"variable index {var} out of range")
            return int(var)
        try:
            return self.labels.index(str(var))
        except ValueError:
            raise ValidationError(f"unknown variable {var!r}; columns are {list(self.labels)}") from None


def read_csv(path: str | Path) -> Dataset:
    """Header row of labels, then one row per time step; no index column."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path} is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header) or any(not cell.strip() for cell in row):
                raise ValidationError(f"{path}:{lineno}: row has missing values")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
            if not all(math.isfinite(v) for v in values):
                raise ValidationError(f"{path}:{lineno}: row has missing values")
            rows.append(values)
    if not rows:
        raise ValidationError(f"{path} has a header but no data rows")
    return Dataset(np.array(rows), tuple(h.strip() for h in header))


def write_csv(path: str | Path, samples: np.ndarray, labels: Sequence[str]) -> None:
    """Write with round-trip float formatting so identical inputs give identical bytes."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(labels) + "\n")
        np.savetxt(fh, np.asarray(samples), delimiter=",", fmt="%.17g")


def lagged_embedding(x: np.ndarray, lags: int) -> np.ndarray:
    """Rows (x_t, x_{t-1}, ..., x_{t-lags}) for t = lags .. T-1, lag-major columns."""
    T = x.shape[0]
    return np.hstack([x[lags - l:T - l] for l in range(lags + 1)])


def _check_redundancy(s0: np.ndarray, labels) -> None:
    """Reject constant or collinear columns from the lag-0 sample covariance ``s0``."""
    var = np.diag(s0)
    flat = [labels[i] for i in np.flatnonzero(var <= 1e-24 * max(var.max(), 1.0))]
    if flat:
        raise NotPositiveDefinite(f"constant column(s) {flat}: covariance is singular")
    sd = np.sqrt(var)
    lo = np.linalg.eigvalsh(s0 / np.outer(sd, sd))[0]
    if lo < REDUNDANCY_EIG:
        raise NotPositiveDefinite(
            f"columns are (nearly) linearly dependent (smallest correlation eigenvalue {lo:.2e})")


def estimate_covariance(d: Dataset, lags: int) -> HistoryCovariance:
    """Sample covariance of the lagged embedding, divisor T' - 1.

    Round-off failures of the positive-definiteness check are repaired by
    diagonal loading, starting at 1e-10 * trace/k and growing tenfold up to
    1e-6 * trace/k; the loading used is recorded in ``metadata``.
    """
    if lags < 1:
        raise ValidationError("lags must be >= 1")
    d.require_samples(lags)
    d = d.demean()
    Z = lagged_embedding(d.samples, lags)
    t_used = Z.shape[0]
    S = Z.T @ Z / (t_used - 1)
    S = 0.5 * (S + S.T)
    _check_redundancy(S[:d.k, :d.k], d.labels)
    scale = np.trace(S) / S.shape[0]
    loading = 0.0
    while True:
        try:
            joint = CovarianceMatrix(S + loading * scale * np.eye(S.shape[0]))
            break
        except NotPositiveDefinite:
            loading = LOADING_START if loading == 0.0 else loading * 10
            if loading > LOADING_CAP * (1 + 1e-9):
                raise NotPositiveDefinite(
                    f"sample covariance not positive definite even with loading {LOADING_CAP:g} * trace/k") from None
    if loading:
        log.warning("applied diagonal loading %.1e * trace/k to the sample covariance", loading)
    r = d.k
    block_map = {(lab, lag): lag * r + j for lag in range(lags + 1) for j, lab in enumerate(d.labels)}
    meta = {"n_samples": d.n_samples, "rows_used": t_used, "divisor": t_used - 1,
            "diagonal_loading": loading}
    return HistoryCovariance(joint, lags, d.labels, block_map, meta)


# -- measures on a history covariance (model-derived or estimated) -------------

def history_conditional_variance(h: HistoryCovariance, target: str, conditioning: Sequence[str]) -> float:
    rows = [h.index(target, 0)]
    given = [i for v in conditioning for i in h.past(v)]
    return float(schur_complement(h.joint.data, rows, given)[0, 0])


def history_transfer_entropy(h: HistoryCovariance, source: str, target: str,
                             conditionals: Sequence[str] = (), unit: InfoUnit | str = InfoUnit.NATS,
                             granger: bool = False) -> InfoValue:
    """Transfer entropy (or Granger causality if ``granger``) over all lags in ``h``."""
    if source == target or source in conditionals or target in conditionals:
        raise ValidationError("source, target and conditionals must be distinct")
    base = [target, *conditionals]
    ratio = history_conditional_variance(h, target, base) / history_conditional_variance(h, target, base + [source])
    factor = 1.0 if granger else 0.5
    return info_value(factor * math.log(ratio), unit, lags_used=h.lag_count,
                      what="Granger causality" if granger else "transfer entropy")


def history_mmi_pid(h: HistoryCovariance, target: str, source_a: str, source_b: str,
                    unit: InfoUnit | str = InfoUnit.NATS) -> PidResult:
    """MMI PID of target_t from the pasts (all lags in ``h``) of two variables."""
    t = GaussianTriplet(h.joint, (h.index(target, 0),), h.past(source_a), h.past(source_b))
    return mmi_pid(t, unit)


# -- MVAR fitting ---------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    model: MvarModel
    stable: bool
    spectral_radius: float
    n_samples: int
    residual_dof: int
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "stable": self.stable,
                "spectral_radius": self.spectral_radius, "n_samples": self.n_samples,
                "residual_dof": self.residual_dof, "warnings": list(self.warnings)}


def fit_mvar(d: Dataset, order: int, unit_root_margin: float = UNIT_ROOT_MARGIN) -> FitResult:
    """Ordinary least squares fit of an order-``order`` MVAR model to demeaned data.

    The fit is flagged unstable when the companion spectral radius is within
    ``unit_root_margin`` of one: a demeaned deterministic trend fits with a
    radius just below one rather than above it.
    """
    if order < 1:
        raise ValidationError("order must be >= 1")
    d.require_samples(order)
    d = d.demean()
    k = d.k
    Z = lagged_embedding(d.samples, order)
    Y, X = Z[:, :k], Z[:, k:]
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ coef
    dof = Y.shape[0] - k * order
    noise = resid.T @ resid / dof
    A = coef.T.reshape(k, order, k).transpose(1, 0, 2)
    try:
        model = MvarModel(A, CovarianceMatrix(noise), d.labels)
    except NotPositiveDefinite as e:
        raise NotPositiveDefinite(f"fitted residual covariance is degenerate: {e}") from None
    radius = model.spectral_radius
    stable = radius < 1.0 - unit_root_margin
    warnings = ()
    if not stable:
        msg = f"fitted model is not safely stable (spectral radius {radius:.6f})"
        log.warning(msg)
        warnings = (msg,)
    return FitResult(model, stable, radius, Y.shape[0], dof, warnings)
