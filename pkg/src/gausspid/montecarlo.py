"""Monte Carlo bridge between simulated data and the analytic measures.

For each scenario a trajectory is simulated, then every quantity is
re-estimated from data: finite-lag quantities from the sample lagged
covariance, infinite-past quantities by fitting an MVAR model and
evaluating it analytically.  Repeating over seeds gives the spread used as
the standard error of a single run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .complexity import complexity_report
from .data import Dataset, estimate_covariance, fit_mvar, history_mmi_pid, history_transfer_entropy
from .flows import FlowQuery, dynamic_mmi_pid, transfer_entropy
from .mvar import MvarModel, example1, example2, example3, simulate, stationary_covariance

_BUILDERS = {"example1": example1, "example2": example2, "example3": example3}


@dataclass(frozen=True)
class Scenario:
    kind: str
    params: tuple[float, ...]

    @property
    def name(self) -> str:
        return f"{self.kind}{self.params}"

    def model(self) -> MvarModel:
        return _BUILDERS[self.kind](*self.params)


def _pid_fields(prefix: str, pid) -> dict[str, float]:
    return {f"wms_{prefix}": pid.wms.value, f"R_{prefix}": pid.redundancy.value,
            f"S_{prefix}": pid.synergy.value}


def model_quantities(kind: str, m: MvarModel, one_lag=None) -> dict[str, float]:
    """Quantities of ``m``; finite-lag ones come from ``one_lag`` (a HistoryCovariance) if given."""
    out: dict[str, float] = {}
    if kind in ("example1", "example2"):
        if one_lag is not None:
            out |= _pid_fields("1", history_mmi_pid(one_lag, "X", "X", "Y"))
        else:
            out |= _pid_fields("1", dynamic_mmi_pid(m, "X", "X", "Y", 1))
        out |= _pid_fields("inf", dynamic_mmi_pid(m, "X", "X", "Y", "inf"))
    if kind == "example1":
        if one_lag is not None:
            s = one_lag.lag_block(0, 0)
            out["te_1"] = history_transfer_entropy(one_lag, "Y", "X").value
            out["granger_1"] = history_transfer_entropy(one_lag, "Y", "X", granger=True).value
        else:
            s = stationary_covariance(m).data
            q = FlowQuery(m, "Y", "X", lags=1)
            out["te_1"] = transfer_entropy(q).value
            out["granger_1"] = 2 * out["te_1"]
        out |= {"sigma_xx": s[0, 0], "sigma_xy": s[0, 1], "sigma_yy": s[1, 1]}
        out["te_inf"] = transfer_entropy(FlowQuery(m, "Y", "X", lags="inf")).value
    if kind == "example3":
        if one_lag is not None:
            out |= _pid_fields("1", history_mmi_pid(one_lag, "X", "Y", "Z"))
            te = history_transfer_entropy(one_lag, "Y", "X").value
            cte = history_transfer_entropy(one_lag, "Y", "X", ["Z"]).value
        else:
            out |= _pid_fields("1", dynamic_mmi_pid(m, "X", "Y", "Z", 1))
            te = transfer_entropy(FlowQuery(m, "Y", "X", lags=1)).value
            cte = transfer_entropy(FlowQuery(m, "Y", "X", ("Z",), lags=1)).value
        out |= {"te_YX_1": te, "cte_YX_Z_1": cte, "cte_minus_te_1": cte - te}
        rep = complexity_report(m, "inf")
        out |= {"cd": rep.causal_density.value, "tgl": rep.global_te.value,
                "sc": rep.synergistic_complexity.value}
    return out


def empirical_quantities(scenario: Scenario, seed: int, steps: int = 10**6) -> dict[str, float]:
    m = scenario.model()
    d = Dataset(simulate(m, steps, seed=seed), m.labels)
    h = estimate_covariance(d, 1)
    fitted = fit_mvar(d, 1).model
    return model_quantities(scenario.kind, fitted, one_lag=h)


def _job(args):
    scenario, seed, steps = args
    return empirical_quantities(scenario, seed, steps)


def run(scenarios, seeds, steps: int = 10**6, workers: int = 1) -> dict[str, dict[str, np.ndarray]]:
    """Empirical quantities for every (scenario, seed); arrays are indexed by seed order."""
    jobs = [(s, seed, steps) for s in scenarios for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    out: dict[str, dict[str, np.ndarray]] = {}
    n = len(seeds)
    for i, s in enumerate(scenarios):
        chunk = results[i * n:(i + 1) * n]
        out[s.name] = {k: np.array([r[k] for r in chunk]) for k in chunk[0]}
    return out


@dataclass(frozen=True)
class Comparison:
    scenario: str
    quantity: str
    truth: float
    mean: float
    se: float

    @property
    def z(self) -> float:
        if self.se == 0.0:
            return 0.0 if abs(self.mean - self.truth) <= 1e-12 else math.inf
        return (self.mean - self.truth) / self.se

    def within(self, n_se: float) -> bool:
        return abs(self.mean - self.truth) <= n_se * self.se + 1e-12


def compare(samples: dict[str, np.ndarray], truth: dict[str, float], scenario: str) -> list[Comparison]:
    """Seed-mean against truth, with the across-seed standard deviation as the per-run standard error."""
    rows = []
    for q, vals in samples.items():
        se = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        rows.append(Comparison(scenario, q, float(truth[q]), float(np.mean(vals)), se))
    return rows
