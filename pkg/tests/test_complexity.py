import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gausspid.complexity import causal_density, complexity_report, global_transfer_entropy, synergistic_complexity
from gausspid.errors import ValidationError
from gausspid.flows import FlowQuery, dynamic_mmi_pid, granger_causality
from gausspid.gaussian import LN2, CovarianceMatrix
from gausspid.mvar import MvarModel, example1, example3
from oracles import example3_values, random_covariance, random_stable_coefficients


def random_model(rng, k, p=1):
    return MvarModel(random_stable_coefficients(rng, k, p), CovarianceMatrix(random_covariance(rng, k)))


EX3_POINTS = [(1.0, 1.0, 0.0), (0.5, 2.0, 0.5), (2.0, 1.0, -0.75), (1.5, 2.0, 0.95), (0.25, 2.0, 0.25)]


class TestExample3ClosedForms:
    @pytest.mark.parametrize("al,ga,rho", EX3_POINTS)
    def test_one_lag(self, al, ga, rho):
        ref = example3_values(al, ga, rho)
        r = complexity_report(example3(al, ga, rho), lags=1)
        assert r.causal_density.value == pytest.approx(ref["cd"], abs=1e-12)
        assert r.global_te.value == pytest.approx(ref["tgl"], abs=1e-12)
        assert r.synergistic_complexity.value == pytest.approx(ref["sc"], abs=1e-12)

    @pytest.mark.parametrize("al,ga,rho", EX3_POINTS[:3])
    def test_infinite_past_equals_one_lag(self, al, ga, rho):
        # every coupling in the model acts at lag 1 from white-noise sources
        ref = example3_values(al, ga, rho)
        r = complexity_report(example3(al, ga, rho))
        assert r.causal_density.value == pytest.approx(ref["cd"], abs=1e-9)
        assert r.global_te.value == pytest.approx(ref["tgl"], abs=1e-9)
        assert r.synergistic_complexity.value == pytest.approx(ref["sc"], abs=1e-9)

    def test_near_degenerate_noise(self):
        ref = example3_values(1.0, 2.0, 0.999)
        r = complexity_report(example3(1.0, 2.0, 0.999), lags=1)
        assert r.synergistic_complexity.value == pytest.approx(ref["sc"], abs=1e-8)
        assert r.causal_density.value == pytest.approx(ref["cd"], abs=1e-8)

    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(-0.9, 0.9))
    def test_symmetric_in_source_strengths(self, al, ga, rho):
        a = complexity_report(example3(al, ga, rho), lags=1)
        b = complexity_report(example3(ga, al, rho), lags=1)
        assert a.causal_density.value == pytest.approx(b.causal_density.value, abs=1e-12)
        assert a.global_te.value == pytest.approx(b.global_te.value, abs=1e-12)
        assert a.synergistic_complexity.value == pytest.approx(b.synergistic_complexity.value, abs=1e-12)


class TestDefinitions:
    @pytest.mark.parametrize("lags", [1, 3])
    def test_causal_density_is_mean_conditional_granger(self, rng, lags):
        m = random_model(rng, 4)
        ref = []
        for i, j in itertools.permutations(range(4), 2):
            rest = tuple(x for x in range(4) if x not in (i, j))
            ref.append(granger_causality(FlowQuery(m, j, i, conditionals=rest, lags=lags)).value)
        assert causal_density(m, lags=lags).value.value == pytest.approx(np.mean(ref), abs=1e-12)

    def test_synergistic_complexity_is_mean_pair_synergy(self, rng):
        m = random_model(rng, 4)
        ref = [dynamic_mmi_pid(m, i, j, k, lags=2).synergy.value
               for i in range(4) for j, k in itertools.combinations(range(4), 2) if i not in (j, k)]
        assert synergistic_complexity(m, lags=2).value.value == pytest.approx(np.mean(ref), abs=1e-12)

    def test_terms_rebuild_aggregate(self, rng):
        m = random_model(rng, 4, 2)
        for measure in (causal_density, global_transfer_entropy, synergistic_complexity):
            res = measure(m, lags=2)
            assert res.recomputed() == pytest.approx(res.value.value, abs=1e-14)
        assert len(causal_density(m, lags=1).terms) == 12
        assert len(synergistic_complexity(m, lags=1).terms) == 12

    def test_no_coupling_gives_zero(self, rng):
        m = MvarModel(np.zeros((1, 3, 3)), CovarianceMatrix(random_covariance(rng, 3)))
        r = complexity_report(m)
        assert r.causal_density.value == 0.0
        assert r.global_te.value == 0.0
        assert r.synergistic_complexity.value == 0.0

    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, 4)
        p = m.relabel(list(rng.permutation(4)))
        a, b = complexity_report(m, lags=2), complexity_report(p, lags=2)
        assert a.causal_density.value == pytest.approx(b.causal_density.value, abs=1e-12)
        assert a.global_te.value == pytest.approx(b.global_te.value, abs=1e-12)
        assert a.synergistic_complexity.value == pytest.approx(b.synergistic_complexity.value, abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, "inf"]))
    def test_pair_synergy_symmetric_in_sources(self, seed, lags):
        m = random_model(np.random.default_rng(seed), 3)
        s1 = dynamic_mmi_pid(m, 0, 1, 2, lags=lags).synergy.value
        s2 = dynamic_mmi_pid(m, 0, 2, 1, lags=lags).synergy.value
        assert abs(s1 - s2) < 1e-12

    def test_threads_do_not_change_result(self, rng):
        m = random_model(rng, 5)
        a = complexity_report(m, workers=1).to_dict()
        b = complexity_report(m, workers=3).to_dict()
        assert a == b

    def test_units(self):
        m = example3(1, 1, 0)
        assert complexity_report(m, lags=1, unit="bits").causal_density.value * LN2 == pytest.approx(
            complexity_report(m, lags=1).causal_density.value, abs=1e-15)


class TestReport:
    def test_two_variables(self):
        r = complexity_report(example1(0.5))
        assert r.synergistic_complexity is None
        assert r.to_dict()["synergistic_complexity"] is None
        assert r.lags_used >= 2

    def test_sc_needs_three(self):
        with pytest.raises(ValidationError):
            synergistic_complexity(example1(0.5))

    def test_to_dict_terms_labelled(self):
        d = complexity_report(example3(1, 1, 0), lags=1).to_dict()
        assert d["lags"] == "1"
        assert {t["measure"] for t in d["per_pair_terms"]} == {"causal_density", "global_te",
                                                              "synergistic_complexity"}
        assert all(t["target"] in ("X", "Y", "Z") for t in d["per_pair_terms"])
