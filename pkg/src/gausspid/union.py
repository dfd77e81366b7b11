"""Union information by direct numerical minimization, and its analytic minimizer.

For a unit-variance target X with whitened sources Y (dim n) and Z (dim p),
the joint covariance is

    [[1, a^T, c^T],
     [a, I_n, B^T],
     [c, B,   I_p]]

and only the p x n cross block B is free once the (X, Y) and (X, Z)
marginals are fixed.  ``minimize_union_information`` searches over B with a
log-barrier quasi-Newton method; ``construct_optimal_B`` gives the minimizer
in closed form.  Agreement between the two, and with max{I(X;Y), I(X;Z)},
is the numerical check of the MMI decomposition.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraint, NotConverged, SingularBlock, ValidationError
from .gaussian import InfoUnit, InfoValue, clamp_information, info_value, mi_nats
from .pid import GaussianTriplet, TripletSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MarginalConstraints:
    """Whitened source-target cross-covariances a = Sigma(Y,X), c = Sigma(Z,X)."""

    a: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).ravel().copy()
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).ravel().copy()
        if a.size == 0 or c.size == 0:
            raise ValidationError("a and c must be non-empty")
        for name, v in (("a", a), ("c", c)):
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"{name} has non-finite entries")
            if np.linalg.norm(v) >= 1.0:
                raise ValidationError(f"|{name}| = {np.linalg.norm(v):.6g} must be < 1")
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def p(self) -> int:
        return self.c.size

    @property
    def mi_y(self) -> float:
        return -0.5 * math.log1p(-float(self.a @ self.a))

    @property
    def mi_z(self) -> float:
        return -0.5 * math.log1p(-float(self.c @ self.c))

    @property
    def theorem_value(self) -> float:
        """max{I(X;Y), I(X;Z)} in nats: the proven minimum of the union information."""
        return max(self.mi_y, self.mi_z)

    @classmethod
    def from_triplet(cls, t: GaussianTriplet) -> "MarginalConstraints":
        """Standardize the target and whiten each source block via its Cholesky factor."""
        t.require_univariate_target()
        s = t.joint.data
        x = t.target[0]
        sd = math.sqrt(s[x, x])

        def whiten(block):
            L = np.linalg.cholesky(s[np.ix_(block, block)])
            return np.linalg.solve(L, s[list(block), x]) / sd

        return cls(whiten(t.source1), whiten(t.source2))


def assemble_joint(mc: MarginalConstraints, B: np.ndarray) -> np.ndarray:
    """Joint covariance of (X, Y, Z) for cross block B (p x n)."""
    n, p = mc.n, mc.p
    m = np.empty((1 + n + p, 1 + n + p))
    m[0, 0] = 1.0
    m[0, 1:1 + n] = mc.a
    m[1:1 + n, 0] = mc.a
    m[0, 1 + n:] = mc.c
    m[1 + n:, 0] = mc.c
    m[1:1 + n, 1:1 + n] = np.eye(n)
    m[1 + n:, 1 + n:] = np.eye(p)
    m[1 + n:, 1:1 + n] = B
    m[1:1 + n, 1 + n:] = B.T
    return m


def union_information(mc: MarginalConstraints, B: np.ndarray) -> float:
    """I(X; Y, Z) in nats for the joint built from B; raises SingularBlock if infeasible."""
    m = assemble_joint(mc, np.asarray(B, dtype=float).reshape(mc.p, mc.n))
    return mi_nats(m, (0,), tuple(range(1, m.shape[0])))


def construct_optimal_B(mc: MarginalConstraints) -> np.ndarray:
    """Minimum-norm solution of B^T c = a, i.e. B = c a^T / (c^T c).

    Requires |a| <= |c|; its spectral norm is then |a|/|c| <= 1, so the
    source block stays a valid covariance and X given (Y, Z) has the same
    residual variance as X given Z alone.
    """
    na, nc = np.linalg.norm(mc.a), np.linalg.norm(mc.c)
    if nc == 0.0:
        if na == 0.0:
            return np.zeros((mc.p, mc.n))
        raise DegenerateConstraint("c = 0 while a != 0: no B satisfies B^T c = a")
    if na > nc * (1 + 1e-15):
        raise ValidationError("construct_optimal_B needs |a| <= |c|; swap the sources")
    return np.outer(mc.c, mc.a) / float(mc.c @ mc.c)


def optimal_cross_covariance(mc: MarginalConstraints) -> np.ndarray:
    """``construct_optimal_B`` with the source roles swapped when |a| > |c|."""
    if np.linalg.norm(mc.a) <= np.linalg.norm(mc.c):
        return construct_optimal_B(mc)
    return construct_optimal_B(MarginalConstraints(mc.c, mc.a)).T


@dataclass
class OptimizerConfig:
    tol: float = 1e-9
    patience: int = 5
    max_iterations: int = 10000
    fd_step: float = 1e-6
    fd_check_step: float = 1e-4
    mu_start: float = 1e-2
    mu_factor: float = 0.1
    mu_floor: float = 1e-8
    start_noise: float = 0.05
    restarts: int = 5
    restart_norm: float = 0.5
    seed: int = 0
    record_trace: bool = False


@dataclass
class TracePoint:
    union_info: float
    min_eig: float
    mu: float


@dataclass
class UnionResult:
    union_info: InfoValue
    optimal_B: np.ndarray
    theorem_value: InfoValue
    gap: float
    iterations: int
    converged: bool
    starts: int = 1
    trace: list[TracePoint] = field(default_factory=list, repr=False)


class _Objective:
    """Barrier objective I(B) - mu * log(lambda_min) over vec(B)."""

    def __init__(self, mc: MarginalConstraints):
        self.mc = mc
        self.mu = 0.0
        self.evals = 0

    def parts(self, x: np.ndarray) -> tuple[float, float]:
        m = assemble_joint(self.mc, x.reshape(self.mc.p, self.mc.n))
        self.evals += 1
        lam = float(np.linalg.eigvalsh(m)[0])
        if lam <= 0.0:
            return math.inf, lam
        try:
            info = mi_nats(m, (0,), tuple(range(1, m.shape[0])))
        except SingularBlock:
            return math.inf, lam
        return info, lam

    def __call__(self, x: np.ndarray) -> float:
        info, lam = self.parts(x)
        if not math.isfinite(info):
            return math.inf
        return info - self.mu * math.log(lam)

    def gradient(self, x: np.ndarray, step: float, lam: float) -> np.ndarray:
        # keep both probes inside the feasible set: |dB| < lambda_min moves eigenvalues by < lambda_min
        h = min(step, 0.1 * lam)
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (self(x + e) - self(x - e)) / (2.0 * h)
        return g


def _feasible(obj: _Objective, x: np.ndarray) -> bool:
    return math.isfinite(obj.parts(x)[0])


def _anchor(obj: _Objective) -> np.ndarray:
    """A strictly feasible point on (or just inside) the analytic minimizer."""
    b = optimal_cross_covariance(obj.mc).ravel()
    for s in (1.0, 1 - 1e-6, 1 - 1e-4, 1 - 1e-3, 1 - 1e-2, 0.9, 0.5, 0.0):
        if _feasible(obj, s * b):
            return s * b
    raise DegenerateConstraint("could not find a feasible cross-covariance")


def _pull_feasible(obj: _Objective, x: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    t = 1.0
    while t > 1e-8:
        y = anchor + t * (x - anchor)
        if _feasible(obj, y):
            return y
        t *= 0.5
    return anchor.copy()


def _bfgs_stage(obj: _Objective, x: np.ndarray, cfg: OptimizerConfig, budget: int,
                trace: list | None) -> tuple[np.ndarray, int, bool]:
    """Minimize the barrier objective at fixed mu; returns (x, iterations, converged)."""
    f = obj(x)
    _, lam = obj.parts(x)
    g = obj.gradient(x, cfg.fd_step, lam)
    if log.isEnabledFor(logging.DEBUG):
        g_wide = obj.gradient(x, cfg.fd_check_step, lam)
        err = np.linalg.norm(g - g_wide) / max(np.linalg.norm(g_wide), 1e-8)
        log.debug("mu=%.1e finite-difference gradient check: relative discrepancy %.2e", obj.mu, err)
    H = np.eye(x.size)
    quiet = 0
    for it in range(1, budget + 1):
        d = -H @ g
        slope = float(g @ d)
        if slope >= 0.0:
            H = np.eye(x.size)
            d = -g
            slope = -float(g @ g)
        if slope == 0.0:
            return x, it, True
        t = 1.0
        accepted = False
        for _ in range(60):
            x_new = x + t * d
            f_new = obj(x_new)
            if f_new <= f + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if not np.allclose(H, np.eye(x.size)):
                H = np.eye(x.size)
                continue
            # no descent possible at this resolution: stationary for our purposes
            return x, it, True
        info_new, lam_new = obj.parts(x_new)
        g_new = obj.gradient(x_new, cfg.fd_step, lam_new)
        if trace is not None:
            trace.append(TracePoint(info_new, lam_new, obj.mu))
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-16 * float(s @ s) ** 0.5 * float(y @ y) ** 0.5 and sy > 0:
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        change = abs(f_new - f)
        x, f, g = x_new, f_new, g_new
        quiet = quiet + 1 if change < cfg.tol * max(abs(f), 1.0) else 0
        if quiet >= cfg.patience:
            return x, it, True
    return x, budget, False


def _run_start(obj: _Objective, x0: np.ndarray, cfg: OptimizerConfig,
               trace: list | None) -> tuple[np.ndarray, int, bool]:
    x = x0
    total = 0
    mu = cfg.mu_start
    converged = False
    while True:
        obj.mu = mu
        x, its, converged = _bfgs_stage(obj, x, cfg, max(cfg.max_iterations - total, 1), trace)
        total += its
        if total >= cfg.max_iterations:
            return x, total, False
        if mu <= cfg.mu_floor * (1 + 1e-12):
            return x, total, converged
        mu = max(mu * cfg.mu_factor, cfg.mu_floor)


def _random_start(rng: np.random.Generator, p: int, n: int, max_norm: float) -> np.ndarray:
    m = rng.standard_normal((p, n))
    norm = np.linalg.norm(m, 2)
    return (m / norm * rng.uniform(0.0, max_norm)).ravel() if norm > 0 else m.ravel()


def minimize_union_information(mc: MarginalConstraints, config: OptimizerConfig | None = None,
                               unit: InfoUnit | str = InfoUnit.NATS) -> UnionResult:
    """Numerically minimize I(X;Y,Z) over the free cross block B.

    The search starts from the analytic minimizer perturbed by uniform noise
    and from ``config.restarts`` random cross blocks; the best end point
    wins.  Non-convergence is reported through ``converged=False`` rather
    than raised.
    """
    cfg = config or OptimizerConfig()
    rng = np.random.default_rng(cfg.seed)
    obj = _Objective(mc)
    anchor = _anchor(obj)
    starts = [anchor + rng.uniform(-cfg.start_noise, cfg.start_noise, anchor.size)]
    starts += [_random_start(rng, mc.p, mc.n, cfg.restart_norm) for _ in range(cfg.restarts)]

    best = None
    trace: list[TracePoint] | None = [] if cfg.record_trace else None
    total_its = 0
    for x0 in starts:
        x0 = _pull_feasible(obj, x0, anchor)
        if trace is not None:
            info0, lam0 = obj.parts(x0)
            trace.append(TracePoint(info0, lam0, cfg.mu_start))
        x, its, conv = _run_start(obj, x0, cfg, trace)
        total_its += its
        info, _ = obj.parts(x)
        if best is None or info < best[0]:
            best = (info, x, conv)

    info, x, conv = best
    theorem = mc.theorem_value
    gap = info - theorem
    result = UnionResult(
        union_info=info_value(info, unit, what="union information"),
        optimal_B=x.reshape(mc.p, mc.n),
        theorem_value=info_value(theorem, unit),
        gap=gap,
        iterations=total_its,
        converged=conv,
        starts=len(starts),
        trace=trace or [],
    )
    if conv and abs(gap) >= 1e-5:
        log.warning("optimizer converged but gap %.3e exceeds 1e-5 nats", gap)
    return result


def synergy_from_union(t: GaussianTriplet | TripletSpec, config: OptimizerConfig | None = None,
                       unit: InfoUnit | str = InfoUnit.NATS) -> InfoValue:
    """Synergy as I(X;Y,Z) minus the numerically minimized union information."""
    if isinstance(t, TripletSpec):
        t = t.triplet()
    t.require_univariate_target()
    mc = MarginalConstraints.from_triplet(t)
    res = minimize_union_information(mc, config)
    if not res.converged:
        raise NotConverged("union-information minimization did not converge", best=res)
    total = mi_nats(t.joint.data, t.target, t.source1 + t.source2)
    return info_value(clamp_information(total - res.union_info.value, "synergy"), unit)


# -- verification harness ---------------------------------------------------

def random_constraints(rng: np.random.Generator, n: int, p: int) -> MarginalConstraints:
    """Random directions with norms drawn uniformly from [0.05, 0.95)."""
    def draw(k):
        v = rng.standard_normal(k)
        return v / np.linalg.norm(v) * rng.uniform(0.05, 0.95)
    return MarginalConstraints(draw(n), draw(p))


def _verify_one(args) -> dict:
    trial, n, p, seed, cfg = args
    rng = np.random.default_rng([seed, trial])
    mc = random_constraints(rng, n, p)
    cfg = OptimizerConfig(**{**cfg.__dict__, "seed": int(rng.integers(2**31))})
    res = minimize_union_information(mc, cfg)
    b_star = optimal_cross_covariance(mc)
    constructive = union_information(mc, b_star)
    return {
        "trial": trial,
        "n": n,
        "p": p,
        "norm_a": float(np.linalg.norm(mc.a)),
        "norm_c": float(np.linalg.norm(mc.c)),
        "theorem_value": mc.theorem_value,
        "union_info": res.union_info.value,
        "gap": res.gap,
        "constructive_gap": constructive - mc.theorem_value,
        "residual_BTc_minus_a": float(np.max(np.abs(
            (b_star.T @ mc.c - mc.a) if np.linalg.norm(mc.a) <= np.linalg.norm(mc.c)
            else (b_star @ mc.a - mc.c)))),
        "iterations": res.iterations,
        "converged": res.converged,
    }


def verify_mmi(trials: int, seed: int = 0, n: int | None = None, p: int | None = None,
               config: OptimizerConfig | None = None, workers: int = 1) -> list[dict]:
    """Run the optimizer against the analytic bound on random instances.

    ``n`` / ``p`` fix the source dimensions; ``None`` draws each from {1, 2, 3}
    per trial.  Output order follows the trial index regardless of ``workers``.
    """
    cfg = config or OptimizerConfig()
    rng = np.random.default_rng(seed)
    jobs = []
    for trial in range(trials):
        nn = n if n is not None else int(rng.integers(1, 4))
        pp = p if p is not None else int(rng.integers(1, 4))
        jobs.append((trial, nn, pp, seed, cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_verify_one, jobs))
    return [_verify_one(j) for j in jobs]
