"""Multivariate autoregressive (MVAR) processes.

    x_t = A_1 x_{t-1} + ... + A_p x_{t-p} + e_t,    e_t ~ N(0, Sigma_e)

Order-p models are handled through their order-1 companion form.  Lagged
covariances follow the convention Gamma_k = E[x_t x_{t-k}^T], so for an
order-1 model Gamma_1 = A Sigma.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    GaussPidError,
    NotConverged,
    NotPositiveDefinite,
    SingularHistory,
    UnstableModel,
    ValidationError,
)
from .gaussian import CovarianceMatrix, as_covariance, schur_complement

STABILITY_MARGIN = 1e-9
MAX_HISTORY_DIM = 5000
MAX_TRUNCATION_LAG = 4096
# Kronecker-vectorized Lyapunov solve up to this companion dimension
_KRON_MAX_DIM = 40


@dataclass(frozen=True, eq=False)
class MvarModel:
    coefficients: np.ndarray          # shape (p, k, k)
    noise_cov: CovarianceMatrix
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.asarray(self.coefficients, dtype=float)
        if A.ndim == 2:
            A = A[None]
        if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[0] < 1:
            raise ValidationError(f"coefficients must have shape (p, k, k), got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValidationError("coefficients contain non-finite entries")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "coefficients", A)
        k = A.shape[1]
        noise = as_covariance(self.noise_cov)
        if noise.dim != k:
            raise ValidationError(f"noise covariance is {noise.dim}x{noise.dim}, expected {k}x{k}")
        object.__setattr__(self, "noise_cov", noise)
        labels = tuple(self.labels) if self.labels else tuple(f"x{i}" for i in range(k))
        if len(labels) != k or len(set(labels)) != k:
            raise ValidationError("labels must be k distinct names")
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return self.coefficients.shape[1]

    @property
    def order(self) -> int:
        return self.coefficients.shape[0]

    @cached_property
    def companion(self) -> np.ndarray:
        k, p = self.k, self.order
        C = np.zeros((k * p, k * p))
        C[:k] = np.hstack(list(self.coefficients))
        if p > 1:
            C[k:, :-k] = np.eye(k * (p - 1))
        return C

    @cached_property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.companion))))

    @property
    def is_stable(self) -> bool:
        return self.spectral_radius < 1.0 - STABILITY_MARGIN

    def require_stable(self) -> None:
        if not self.is_stable:
            raise UnstableModel(f"model is not stationary (spectral radius {self.spectral_radius:.12g})")

    def index(self, var: int | str) -> int:
        if isinstance(var, (int, np.integer)):
            if not 0 <= var < self.k:
                raise ValidationError(f"variable index {var} out of range")
            return int(var)
        try:
            return self.labels.index(var)
        except ValueError:
            raise ValidationError(f"unknown variable {var!r}; labels are {list(self.labels)}") from None

    def relabel(self, perm: Sequence[int]) -> "MvarModel":
        """Model with variables reordered so that new variable i is old variable perm[i]."""
        perm = list(perm)
        A = self.coefficients[:, perm][:, :, perm]
        noise = self.noise_cov.data[np.ix_(perm, perm)]
        return MvarModel(A, CovarianceMatrix(noise), tuple(self.labels[i] for i in perm))

    @cached_property
    def _companion_cov(self) -> np.ndarray:
        self.require_stable()
        k, p = self.k, self.order
        C = self.companion
        Q = np.zeros((k * p, k * p))
        Q[:k, :k] = self.noise_cov.data
        n = k * p
        if n <= _KRON_MAX_DIM:
            lhs = np.eye(n * n) - np.kron(C, C)
            S = np.linalg.solve(lhs, Q.ravel()).reshape(n, n)
        else:
            S = sla.solve_discrete_lyapunov(C, Q)
        return 0.5 * (S + S.T)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "coefficients": [a.tolist() for a in self.coefficients],
            "noise_cov": self.noise_cov.data.tolist(),
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MvarModel":
        try:
            coeffs = np.asarray(d["coefficients"], dtype=float)
            noise = np.asarray(d["noise_cov"], dtype=float)
        except KeyError as e:
            raise ValidationError(f"model file is missing key {e}") from None
        except (TypeError, ValueError) as e:
            raise ValidationError(f"model file has malformed matrices: {e}") from None
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        order = int(d.get("order", coeffs.shape[0]))
        if order != coeffs.shape[0]:
            raise ValidationError(f"order {order} does not match {coeffs.shape[0]} coefficient matrices")
        return cls(coeffs, CovarianceMatrix(noise), tuple(d.get("labels") or ()))

    @classmethod
    def load(cls, path: str | Path) -> "MvarModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")


# -- the three worked examples -------------------------------------------------

def example1(alpha: float) -> MvarModel:
    """X driven equally by its own past and by the past of white-noise Y."""
    A = np.array([[alpha, alpha], [0.0, 0.0]])
    return MvarModel(A, CovarianceMatrix(np.eye(2)), ("X", "Y"))


def example2(alpha: float, beta: float) -> MvarModel:
    """Bidirectional coupling X <- Y <- X with no self-connections."""
    A = np.array([[0.0, alpha], [beta, 0.0]])
    return MvarModel(A, CovarianceMatrix(np.eye(2)), ("X", "Y"))


def example3(alpha: float, gamma: float, rho: float) -> MvarModel:
    """X driven by the pasts of two instantaneously correlated white-noise sources Y, Z."""
    delta = math.sqrt(1 + alpha ** 2 + 2 * alpha * gamma * rho + gamma ** 2)
    A = np.array([[0.0, alpha, gamma], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) / delta
    noise = np.array([[1.0 / delta ** 2, 0.0, 0.0], [0.0, 1.0, rho], [0.0, rho, 1.0]])
    return MvarModel(A, CovarianceMatrix(noise), ("X", "Y", "Z"))


# -- covariance structure -------------------------------------------------------

def stationary_covariance(m: MvarModel) -> CovarianceMatrix:
    """Solve Sigma = sum_i A_i Sigma A_i^T + cross terms + Sigma_e for the stationary covariance."""
    S = m._companion_cov
    k = m.k
    try:
        return CovarianceMatrix(S[:k, :k], m.labels)
    except NotPositiveDefinite as e:
        raise SingularHistory(f"stationary covariance is degenerate: {e}") from None


def lyapunov_residual(m: MvarModel, sigma: CovarianceMatrix | np.ndarray | None = None) -> float:
    """Relative infinity-norm residual of the companion Lyapunov equation."""
    C = m.companion
    S = m._companion_cov if sigma is None or m.order > 1 else np.asarray(sigma)
    Q = np.zeros_like(C)
    Q[:m.k, :m.k] = m.noise_cov.data
    r = S - C @ S @ C.T - Q
    return float(np.max(np.sum(np.abs(r), axis=1)) / np.max(np.sum(np.abs(S), axis=1)))


def autocovariances(m: MvarModel, max_lag: int) -> np.ndarray:
    """Gamma_0 ... Gamma_max_lag stacked into shape (max_lag + 1, k, k)."""
    k, p = m.k, m.order
    S = m._companion_cov
    G = np.empty((max_lag + 1, k, k))
    for j in range(min(p, max_lag + 1)):
        G[j] = S[:k, j * k:(j + 1) * k]
    A = m.coefficients
    for j in range(p, max_lag + 1):
        acc = np.zeros((k, k))
        for i in range(p):
            acc += A[i] @ G[j - 1 - i]
        G[j] = acc
    return G


def lag_covariance(m: MvarModel, k: int, sigma: CovarianceMatrix | np.ndarray | None = None) -> np.ndarray:
    """Gamma_k = E[x_t x_{t-k}^T].  For order 1 and a given sigma this is A^k Sigma."""
    if k < 0:
        raise ValidationError("lag must be non-negative")
    if m.order == 1 and sigma is not None:
        s = np.asarray(sigma, dtype=float)
        return np.linalg.matrix_power(m.coefficients[0], k) @ s
    return autocovariances(m, k)[k]


@dataclass(frozen=True)
class HistoryCovariance:
    """Joint covariance of (x_t, x_{t-1}, ..., x_{t-L}) over a subset of variables.

    Rows are ordered lag-major: the present of every selected variable, then
    lag 1, and so on.  ``block_map`` maps (label, lag) to the row index.
    """

    joint: CovarianceMatrix
    lag_count: int
    labels: tuple[str, ...]
    block_map: dict = field(repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    def index(self, label: str, lag: int) -> int:
        try:
            return self.block_map[(label, lag)]
        except KeyError:
            raise ValidationError(f"history has no entry for {label!r} at lag {lag}") from None

    def indices(self, label: str, lags: Iterable[int]) -> tuple[int, ...]:
        return tuple(self.index(label, l) for l in lags)

    def past(self, label: str, lags: int | None = None) -> tuple[int, ...]:
        lags = self.lag_count if lags is None else lags
        return self.indices(label, range(1, lags + 1))

    def lag_block(self, i: int, j: int) -> np.ndarray:
        r = len(self.labels)
        return self.joint.data[i * r:(i + 1) * r, j * r:(j + 1) * r]

    def toeplitz_error(self) -> float:
        """Largest deviation of any (i, j) block from the (0, |i - j|) block (transposed as needed)."""
        err = 0.0
        L = self.lag_count
        for i in range(L + 1):
            for j in range(L + 1):
                ref = self.lag_block(0, j - i) if j >= i else self.lag_block(0, i - j).T
                err = max(err, float(np.max(np.abs(self.lag_block(i, j) - ref))))
        return err


def _toeplitz_from_autocov(G: np.ndarray) -> np.ndarray:
    """Block-Toeplitz matrix with (i, j) block Gamma_{j-i} (Gamma_{i-j}^T below the diagonal)."""
    L1, r, _ = G.shape
    i = np.arange(L1)
    D = i[None, :] - i[:, None]
    upper = G[np.abs(D)]
    lower = np.swapaxes(G, 1, 2)[np.abs(D)]
    blocks = np.where((D >= 0)[:, :, None, None], upper, lower)
    return blocks.transpose(0, 2, 1, 3).reshape(L1 * r, L1 * r)


def history_covariance(m: MvarModel, lags: int, variables: Sequence[int | str] | None = None) -> HistoryCovariance:
    if lags < 1:
        raise ValidationError("lags must be >= 1")
    idx = list(range(m.k)) if variables is None else [m.index(v) for v in variables]
    if len(set(idx)) != len(idx):
        raise ValidationError("duplicate variables in history selection")
    dim = len(idx) * (lags + 1)
    if dim > MAX_HISTORY_DIM:
        raise ValidationError(
            f"history matrix would be {dim}x{dim} (cap {MAX_HISTORY_DIM}); use fewer lags or a looser tolerance")
    G = autocovariances(m, lags)[:, idx][:, :, idx]
    labels = tuple(m.labels[i] for i in idx)
    try:
        joint = CovarianceMatrix(_toeplitz_from_autocov(G))
    except NotPositiveDefinite as e:
        raise SingularHistory(f"history covariance over {lags} lags is degenerate: {e}") from None
    r = len(idx)
    block_map = {(lab, lag): lag * r + j for lag in range(lags + 1) for j, lab in enumerate(labels)}
    return HistoryCovariance(joint, lags, labels, block_map)


# -- conditional variances over finite and truncated-infinite pasts -------------

def _normalize_conditioning(m: MvarModel, conditioning, lags) -> dict[int, int]:
    """Map variable index -> number of past lags to condition on."""
    if isinstance(conditioning, Mapping):
        return {m.index(v): int(l) for v, l in conditioning.items()}
    return {m.index(v): int(lags) for v in conditioning}


def conditional_variance(m: MvarModel, target, conditioning, lags: int = 1) -> float:
    """Variance of target_t given the pasts of the conditioning variables.

    ``conditioning`` is either an iterable of variables (each conditioned on
    ``lags`` past values) or a mapping variable -> lag count.
    """
    t = m.index(target)
    cond = {v: l for v, l in _normalize_conditioning(m, conditioning, lags).items() if l > 0}
    if not cond:
        return float(stationary_covariance(m).data[t, t])
    L = max(cond.values())
    variables = sorted(set(cond) | {t})
    h = history_covariance(m, L, variables)
    tl = m.labels[t]
    rows = [h.index(tl, 0)]
    given = [i for v, l in sorted(cond.items()) for i in h.past(m.labels[v], l)]
    return float(schur_complement(h.joint.data, rows, given)[0, 0])


def infinite_past_conditional_variance(m: MvarModel, target, conditioning: Iterable, tol: float = 1e-10,
                                       max_lag: int = MAX_TRUNCATION_LAG) -> tuple[float, int]:
    """Variance of target_t given the entire pasts of ``conditioning``.

    Truncation lags start at the companion dimension k*p and double until two
    successive values agree to relative tolerance ``tol``.  Returns the
    variance and the lag count at which it was accepted.
    """
    m.require_stable()
    cond = sorted({m.index(v) for v in conditioning})
    t = m.index(target)
    if not cond:
        return float(stationary_covariance(m).data[t, t]), 0
    r = len(set(cond) | {t})
    L = max(1, m.k * m.order)
    prev = conditional_variance(m, t, cond, L)
    while True:
        nxt = 2 * L
        if nxt > max_lag or r * (nxt + 1) > MAX_HISTORY_DIM:
            raise NotConverged(
                f"conditional variance not converged to tol={tol:g} by lag {L}; "
                f"loosen the tolerance or check the model is not close to a unit root",
                best=(prev, L))
        try:
            cur = conditional_variance(m, t, cond, nxt)
        except SingularHistory:
            # history became numerically redundant: further lags carry no new information
            return prev, L
        if abs(cur - prev) <= tol * abs(prev):
            return cur, nxt
        prev, L = cur, nxt


# -- simulation ---------------------------------------------------------------

_CHUNK = 64


def simulate(m: MvarModel, steps: int, seed: int = 0, burn_in: int = 1000) -> np.ndarray:
    """Draw a (steps x k) trajectory, discarding ``burn_in`` initial steps.

    Uses a blocked form of the recursion: within each chunk of 64 steps the
    zero-state response is one matrix product, and chunk boundary states are
    propagated sequentially.  Output is deterministic for a given seed.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if burn_in < 0:
        raise ValidationError("burn_in must be >= 0")
    m.require_stable()
    k, n = m.k, m.k * m.order
    rng = np.random.default_rng(seed)
    total = steps + burn_in
    nchunks = -(-total // _CHUNK)
    chol = np.linalg.cholesky(m.noise_cov.data)
    e = rng.standard_normal((nchunks * _CHUNK, k)) @ chol.T

    C = m.companion
    powers = [np.eye(n)]
    for _ in range(_CHUNK):
        powers.append(C @ powers[-1])
    # state_i = sum_{l<=i} C^{i-l} G e_l + C^{i+1} s0, with G = first k columns
    H_out = np.zeros((_CHUNK * k, _CHUNK * k))
    for i in range(_CHUNK):
        for l in range(i + 1):
            H_out[i * k:(i + 1) * k, l * k:(l + 1) * k] = powers[i - l][:k, :k]
    H_end = np.hstack([powers[_CHUNK - 1 - l][:, :k] for l in range(_CHUNK)])
    P = np.vstack([powers[i + 1][:k] for i in range(_CHUNK)])

    E = e.reshape(nchunks, _CHUNK * k)
    out = E @ H_out.T
    ends = E @ H_end.T
    Cm = powers[_CHUNK]
    starts = np.zeros((nchunks, n))
    s = np.zeros(n)
    for j in range(nchunks):
        starts[j] = s
        s = Cm @ s + ends[j]
    out += starts @ P.T
    x = out.reshape(nchunks * _CHUNK, k)
    return np.ascontiguousarray(x[burn_in:total])
