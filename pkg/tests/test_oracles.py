import math

import numpy as np
import pytest

from expldp import TrinomialSpec, builtin_model, curved_line_min_oracle, multinomial_mle_tail
from expldp.errors import TooLarge
from expldp.models import ModelEvent, event_at_least, fit_rate_limit
from expldp.intervals import Interval
from expldp.oracles import enumeration_rates
from expldp.rates import contraction_rate


class TestTrinomialSpec:
    def test_probabilities_from_origin(self):
        spec = TrinomialSpec.from_theta0(1, [0.0, 0.0], event_at_least(0.5))
        assert spec.probabilities == pytest.approx((0.5, 0.25, 0.25))

    def test_invalid_probabilities_rejected(self):
        with pytest.raises(ValueError):
            TrinomialSpec(n=3, probabilities=(0.5, 0.5, 0.1),
                          event=event_at_least(0.0))


class TestEnumeration:
    @pytest.mark.parametrize("n", [1, 2, 7, 40, 200])
    def test_outcome_count_stars_and_bars(self, n):
        spec = TrinomialSpec.from_theta0(n, [0.0, 0.0], event_at_least(0.0))
        result = multinomial_mle_tail(spec)
        assert result.outcomes == (n + 1) * (n + 2) // 2

    def test_n2_zero_mle_event(self):
        # counts with n1 = n2 have MLE coordinate exactly zero:
        # (2,0,0) with probability 1/4 and (0,1,1) with probability 1/8
        ev = ModelEvent((Interval(0.0, 0.0),))
        spec = TrinomialSpec.from_theta0(2, [0.0, 0.0], ev)
        result = multinomial_mle_tail(spec)
        assert result.probability == pytest.approx(0.375, abs=1e-15)

    def test_all_outcomes_sum_to_one(self):
        # the mass identity is asserted internally; a full event returns 1
        ev = ModelEvent((Interval(-math.inf, math.inf),))
        for n in (1, 2, 10, 100):
            spec = TrinomialSpec.from_theta0(n, [0.1, -0.2], ev)
            assert multinomial_mle_tail(spec).probability == pytest.approx(
                1.0, abs=1e-12
            )

    def test_cap_enforced(self):
        spec = TrinomialSpec.from_theta0(2001, [0.0, 0.0], event_at_least(0.5))
        with pytest.raises(TooLarge):
            multinomial_mle_tail(spec)

    def test_extrapolated_rates_match_contraction(self):
        schedule = tuple(range(100, 1601, 100))
        rates = enumeration_rates([0.0, 0.0], event_at_least(0.5), schedule)
        extrapolated = fit_rate_limit(schedule, rates)
        target = contraction_rate(
            builtin_model("hw-line"), np.zeros(2), 0.5, method="pythagoras"
        )
        assert abs(extrapolated - target) / target < 0.05


class TestCurvedLineOracle:
    def test_identity_point_at_truth(self):
        value, arg = curved_line_min_oracle(1.0, 1.0)
        assert arg == pytest.approx(1.0, abs=1e-7)
        assert abs(value) < 1e-10

    def test_strict_improvement_over_identity_point(self):
        # at theta = 2 the minimum is strictly below the rate at the
        # identity point x = 1/theta of the line
        value, arg = curved_line_min_oracle(1.0, 2.0)
        c = 2.0
        x_id = 1.0 / c
        g = 1.0 / (c * c) + x_id / c
        iota_id = (
            -0.5 * math.log(g - x_id * x_id) - 0.0 - 1.0 * x_id + 0.5 * g
        )
        assert value < iota_id - 1e-4

    def test_refinement_is_monotone_and_converges(self):
        values = []
        for rounds in (0, 2, 4, 8, 12):
            v, _ = curved_line_min_oracle(1.0, 2.0, n_grid=801,
                                          refine_rounds=rounds)
            values.append(v)
        assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
        assert abs(values[-1] - values[-2]) < 1e-6

    def test_positive_coordinates_required(self):
        with pytest.raises(ValueError):
            curved_line_min_oracle(-1.0, 2.0)

    @pytest.mark.parametrize("coord", [0.5, 1.5, 2.0])
    def test_agrees_with_line_minimize_after_polish(self, coord):
        # two independent routes to the same minimum: the analytic rate
        # profile on a refined grid vs Newton conjugation plus the
        # stationarity-certificate polish
        model = builtin_model("gauss-mean-eq-sd")
        value, _ = curved_line_min_oracle(1.0, coord)
        tilde = contraction_rate(model, model.map(1.0), coord, "line-minimize")
        assert abs(value - tilde) <= 1e-6
