import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symgame import (
    ProtocolError,
    SocialState,
    constant_protocol,
    custom_protocol,
    default_rate_cap,
    evaluate_rates,
    make_linear_game,
    make_separable_game,
    sample_states,
    sum_exponential_protocol,
    table_protocol,
    validate_hypotheses,
)

RPS = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]


class TestMakeLinearGame:
    def test_rps_barycenter_payoff_is_zero(self):
        game = make_linear_game(RPS, mass=1.0)
        (pi,) = game.payoff_at(SocialState.single([1 / 3, 1 / 3, 1 / 3]))
        assert np.allclose(pi, 0.0)

    def test_identity_game_reads_state(self):
        game = make_linear_game(np.eye(2))
        (pi,) = game.payoff_at(SocialState.single([1.0, 0.0]))
        assert pi.tolist() == [1.0, 0.0]

    def test_rps_pure_state_reads_column(self):
        game = make_linear_game(RPS)
        (pi,) = game.payoff_at(SocialState.single([1.0, 0.0, 0.0]))
        assert pi.tolist() == [0.0, 1.0, -1.0]

    @pytest.mark.parametrize(
        "matrix",
        [np.ones((3, 2)), [[1.0, np.nan], [0.0, 1.0]], [[np.inf, 0], [0, 1]]],
    )
    def test_rejects_bad_matrices(self, matrix):
        with pytest.raises(ValueError):
            make_linear_game(matrix)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_payoff_is_exactly_linear(self, seed):
        game = make_linear_game(RPS)
        rng = np.random.default_rng(seed)
        x, y = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        alpha = rng.random()
        mix = alpha * x + (1 - alpha) * y
        (f_mix,) = game.payoff_at(SocialState.single(mix / mix.sum()))
        (f_x,) = game.payoff_at(SocialState.single(x))
        (f_y,) = game.payoff_at(SocialState.single(y))
        assert np.max(np.abs(f_mix - (alpha * f_x + (1 - alpha) * f_y))) < 1e-12


class TestSocialState:
    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError, match="negative"):
            SocialState.single([0.5, -0.5, 1.0])

    def test_mass_check_through_game(self):
        game = make_linear_game(RPS)
        with pytest.raises(ValueError, match="mass"):
            game.require_valid_state(SocialState.single([0.5, 0.5, 0.5]))

    @given(st.integers(1, 10**6), st.integers(2, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_lattice_round_trip(self, denom, n, seed):
        rng = np.random.default_rng(seed)
        cuts = np.sort(rng.integers(0, denom + 1, size=n - 1))
        counts = np.diff(np.concatenate(([0], cuts, [denom])))
        state = SocialState.from_counts((counts,), (denom,))
        assert state.counts() == (tuple(int(k) for k in counts),)

    def test_counts_requires_denominator(self):
        with pytest.raises(ValueError, match="denominator"):
            SocialState.single([0.5, 0.5]).counts()


class TestEvaluateRates:
    def test_constant_protocol_all_ones(self):
        state = SocialState.single([0.2, 0.3, 0.5])
        (rho,) = evaluate_rates(constant_protocol(1.0), np.zeros(3), state)
        assert np.array_equal(rho, np.ones((3, 3)))

    def test_sum_exponential_zero_temperature(self):
        state = SocialState.single([0.2, 0.3, 0.5])
        (rho,) = evaluate_rates(sum_exponential_protocol(0.0), np.array([3.0, -1.0, 0.5]), state)
        assert np.array_equal(rho, np.ones((3, 3)))

    def test_sum_exponential_values(self):
        state = SocialState.single([0.2, 0.3, 0.5])
        pi = np.array([1.0, 0.0, -1.0])
        (rho,) = evaluate_rates(sum_exponential_protocol(1.0), pi, state)
        e = math.e
        expected = [[e**2, e, 1.0], [e, 1.0, 1 / e], [1.0, 1 / e, e**-2]]
        assert np.allclose(rho, expected, rtol=1e-15)
        assert rho[0, 1] == rho[1, 0] == e
        assert rho[0, 2] == rho[2, 0] == 1.0
        assert rho[1, 2] == rho[2, 1] == 1 / e

    def test_dimension_mismatch(self):
        state = SocialState.single([0.5, 0.5])
        with pytest.raises(ValueError):
            evaluate_rates(constant_protocol(1.0), np.zeros(3), state)

    def test_negative_rate_from_custom_protocol(self):
        bad = custom_protocol(lambda pi, x: -np.ones((len(x), len(x))))
        with pytest.raises(ProtocolError, match="negative"):
            evaluate_rates(bad, np.zeros(2), SocialState.single([0.5, 0.5]))

    def test_non_finite_rate_from_custom_protocol(self):
        bad = custom_protocol(lambda pi, x: np.full((len(x), len(x)), np.nan))
        with pytest.raises(ProtocolError, match="non-finite"):
            evaluate_rates(bad, np.zeros(2), SocialState.single([0.5, 0.5]))


class TestValidateHypotheses:
    def test_constant_protocol_report(self):
        game = make_linear_game(RPS)
        states = sample_states(game, resolution=6)
        report = validate_hypotheses(game, constant_protocol(1.0), states, exhaustive=True)
        assert report.symmetric
        assert report.fully_supported
        assert report.max_asymmetry == 0.0
        assert report.min_rate == 1.0
        assert report.exhaustive

    def test_asymmetric_table(self):
        game = make_linear_game(np.zeros((2, 2)))
        proto = table_protocol([[1.0, 2.0], [3.0, 1.0]])
        report = validate_hypotheses(game, proto, sample_states(game, resolution=4))
        assert not report.symmetric
        assert report.max_asymmetry == 1.0

    def test_sum_exponential_full_support_on_rps(self):
        # payoff sums on the simplex stay above -2, so exp(pi_i + pi_j) >= e^-2
        game = make_linear_game(RPS)
        proto = sum_exponential_protocol(1.0, support_floor=math.exp(-2.0))
        states = sample_states(game, resolution=40)
        report = validate_hypotheses(game, proto, states)
        assert report.fully_supported
        floor = min(
            float(np.min(np.add.outer(pi, pi)))
            for pi in (game.payoff_at(s)[0] for s in states)
        )
        assert math.exp(floor) >= math.exp(-2.0)
        assert report.min_rate >= math.exp(-2.0)

    def test_builtin_symmetric_protocols_are_exactly_symmetric(self):
        game = make_linear_game(RPS)
        states = sample_states(game, n_random=200, seed=3)
        for proto in (constant_protocol(2.5), sum_exponential_protocol(1.7)):
            for state in states:
                (rho,) = evaluate_rates(proto, game.payoff_at(state)[0], state)
                assert np.array_equal(rho, rho.T)

    def test_random_sampling_size(self):
        game = make_linear_game(RPS)
        states = sample_states(game, n_random=1000, seed=1)
        assert len(states) == 1000
        for state in states[:10]:
            game.require_valid_state(state, tol=1e-9)


class TestRateCap:
    def test_default_cap_inflates_by_ten_percent(self):
        game = make_linear_game(RPS)
        states = sample_states(game, resolution=5)
        (cap,) = default_rate_cap(game, constant_protocol(2.0), states)
        assert np.allclose(cap, 2.2)

    def test_table_protocol_carries_its_own_cap(self):
        proto = table_protocol([[1.0, 2.0], [2.0, 1.0]])
        assert np.allclose(proto.rate_cap, [[1.1, 2.2], [2.2, 1.1]])
        assert np.array_equal(proto.rate_cap, proto.rate_cap.T)


class TestMultiPopulation:
    def test_separable_game_payoffs(self):
        game = make_separable_game([np.eye(2), RPS], masses=[1.0, 1.0])
        state = SocialState(parts=(np.array([0.25, 0.75]), np.array([1 / 3, 1 / 3, 1 / 3])))
        payoffs = game.payoff_at(state)
        assert np.allclose(payoffs[0], [0.25, 0.75])
        assert np.allclose(payoffs[1], 0.0)

    def test_protocol_count_mismatch(self):
        game = make_separable_game([np.eye(2), np.eye(2)])
        state = game.barycenter()
        with pytest.raises(ValueError, match="protocols"):
            evaluate_rates([constant_protocol(1.0)] * 3, game.payoff_at(state), state)
