"""
Tests for click simulators and session log files
"""

import numpy as np
import pytest

from src.click_models.models import AttractivenessTable, ClickModelType, SessionRecord, clicks_matrix
from src.click_models.session_log import (
    format_session,
    parse_session_line,
    read_sessions,
    read_yandex_log,
    write_sessions,
)
from src.click_models.simulator import (
    marginal_click_probs,
    satisfaction_from_weights,
    simulate_session,
    simulate_sessions,
    ubm_click_prob,
)
from src.core.exceptions import InvalidArgumentError
from src.core.models import PositionWeights


class TestUBMClickProbability:
    """Test the UBM click probability"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights(K=2, table=[[1.0], [0.2, 0.8]])

    def test_examples(self):
        """Test gamma * w[k][k']"""
        assert ubm_click_prob(0.5, 1, 0, self.weights) == pytest.approx(0.5)
        assert ubm_click_prob(0.5, 2, 1, self.weights) == pytest.approx(0.4)
        assert ubm_click_prob(0.5, 2, 0, self.weights) == pytest.approx(0.1)

    def test_invalid_arguments(self):
        """Test preconditions"""
        with pytest.raises(InvalidArgumentError):
            ubm_click_prob(1.5, 1, 0, self.weights)
        with pytest.raises(InvalidArgumentError):
            ubm_click_prob(0.5, 3, 0, self.weights)

    def test_second_position_marginal(self):
        """Test P(click at 2) for gamma=(0.5, 0.5)"""
        probs = marginal_click_probs("UBM", [0.5, 0.5], self.weights)
        assert probs.tolist() == pytest.approx([0.5, 0.25])

    def test_second_position_empirical(self):
        """Test simulated click rate at position 2"""
        n = 1_000_000
        clicks = simulate_sessions("UBM", [0.5, 0.5], self.weights, n, rng=42)
        rate = float(clicks[:, 1].mean())
        assert abs(rate - 0.25) < 3 * np.sqrt(0.25 * 0.75 / n)


class TestSimulators:
    """Test generative click models"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights.geometric(4, 0.8)
        self.gammas = [0.6, 0.3, 0.8, 0.4]
        self.satisfaction = [0.5, 0.3, 0.6, 1.0]

    def test_cascade_stops_at_certain_click(self):
        """Test CM with gamma_1 = 1"""
        for seed in range(20):
            clicks = simulate_session("CM", [1.0, 0.7, 0.9], self.weights, rng=seed)
            assert clicks.tolist() == [1, 0, 0]

    def test_zero_attractiveness_never_clicks(self):
        """Test every model with gamma = 0"""
        for model in ClickModelType:
            clicks = simulate_sessions(
                model, [0.0, 0.0, 0.0], self.weights, 500, rng=1, satisfaction=self.satisfaction
            )
            assert clicks.sum() == 0

    def test_dcm_needs_satisfaction(self):
        """Test DCM without satisfaction values"""
        with pytest.raises(InvalidArgumentError):
            simulate_session("DCM", self.gammas, self.weights, rng=0)

    def test_unknown_model(self):
        """Test unsupported model tag"""
        with pytest.raises(InvalidArgumentError):
            simulate_session("RCM", self.gammas, self.weights, rng=0)

    def test_gamma_out_of_range(self):
        """Test attractiveness validation"""
        with pytest.raises(InvalidArgumentError):
            simulate_session("UBM", [0.5, 1.2], self.weights, rng=0)
        with pytest.raises(InvalidArgumentError):
            simulate_session("UBM", [0.5] * 5, self.weights, rng=0)

    def test_deterministic_given_seed(self):
        """Test identical draws for identical seeds"""
        a = simulate_sessions("UBM", self.gammas, self.weights, 100, rng=9)
        b = simulate_sessions("UBM", self.gammas, self.weights, 100, rng=9)
        assert np.array_equal(a, b)
        assert a.dtype == np.int8

    def test_empirical_matches_marginals(self):
        """Test every model's click rates against the exact marginals"""
        n = 100_000
        for model in ClickModelType:
            clicks = simulate_sessions(
                model, self.gammas, self.weights, n, rng=5, satisfaction=self.satisfaction
            )
            probs = marginal_click_probs(model, self.gammas, self.weights, self.satisfaction)
            for k in range(4):
                se = np.sqrt(probs[k] * (1 - probs[k]) / n)
                assert abs(clicks[:, k].mean() - probs[k]) < 4 * se, (model, k)

    def test_ubm_marginals_brute_force(self):
        """Test the dynamic program against enumeration of click vectors"""
        weights = PositionWeights.geometric(3, 0.7)
        gammas = [0.4, 0.9, 0.5]
        m = weights.matrix
        expected = np.zeros(3)
        for bits in range(8):
            clicks = [(bits >> k) & 1 for k in range(3)]
            p = 1.0
            last = 0
            for k, c in enumerate(clicks):
                q = m[k, last] * gammas[k]
                p *= q if c else 1 - q
                if c:
                    last = k + 1
            expected += p * np.array(clicks)
        assert np.allclose(marginal_click_probs("UBM", gammas, weights), expected)

    def test_cascade_clicks_at_most_once(self):
        """Test single-click property of CM"""
        clicks = simulate_sessions("CM", self.gammas, self.weights, 1000, rng=2)
        assert clicks.sum(axis=1).max() <= 1

    def test_satisfaction_from_weights(self):
        """Test DCM stop probabilities implied by UBM weights"""
        sat = satisfaction_from_weights(PositionWeights.geometric(3, 0.8))
        assert sat.tolist() == pytest.approx([0.2, 0.2, 1.0])


class TestSessionRecords:
    """Test logged session models"""

    def test_non_binary_clicks_rejected(self):
        """Test click validation"""
        with pytest.raises(ValueError):
            SessionRecord(user_id="u", displayed=["a", "b"], clicks=[1, 2])

    def test_misaligned_rejected(self):
        """Test clicks must align with displayed items"""
        with pytest.raises(ValueError):
            SessionRecord(user_id="u", displayed=["a", "b"], clicks=[1])
        with pytest.raises(ValueError):
            SessionRecord(user_id="u", displayed=["a", "a"], clicks=[1, 0])

    def test_clicks_matrix(self):
        """Test stacking click vectors"""
        sessions = [
            SessionRecord(user_id="u", displayed=["a", "b"], clicks=[1, 0]),
            SessionRecord(user_id="v", displayed=["b", "a"], clicks=[0, 0]),
        ]
        assert clicks_matrix(sessions).tolist() == [[1, 0], [0, 0]]

    def test_attractiveness_table(self):
        """Test gamma lookup with and without users"""
        table = AttractivenessTable(values={"a": 0.3})
        assert table.gamma("a") == 0.3
        per_user = AttractivenessTable(per_user=True, values={("u", "a"): 0.7})
        assert per_user.gamma("a", user="u") == 0.7
        with pytest.raises(ValueError):
            AttractivenessTable(values={"a": 1.3})


class TestSessionLog:
    """Test canonical and Yandex log formats"""

    def test_parse_line(self):
        """Test one canonical line"""
        record = parse_session_line("u7\ta,b,c\t0,1,0\n")
        assert record.user_id == "u7"
        assert record.displayed == ["a", "b", "c"]
        assert record.clicks == [0, 1, 0]
        assert format_session(record) == "u7\ta,b,c\t0,1,0"

    def test_malformed_lines(self):
        """Test malformed canonical lines"""
        with pytest.raises(InvalidArgumentError):
            parse_session_line("u7\ta,b,c", 3)
        with pytest.raises(InvalidArgumentError):
            parse_session_line("u7\ta,b\t0,x", 4)
        with pytest.raises(InvalidArgumentError):
            parse_session_line("u7\ta,b\t0,1,1", 5)

    def test_write_and_read(self, tmp_path):
        """Test session file on disk"""
        sessions = [
            SessionRecord(user_id="u1", displayed=["a", "b"], clicks=[1, 0]),
            SessionRecord(user_id="u2", displayed=["c", "a"], clicks=[0, 1]),
        ]
        path = tmp_path / "log.tsv"
        assert write_sessions(sessions, path) == 2
        with open(path, "a", encoding="utf-8") as f:
            f.write("\n")
        loaded = read_sessions(path)
        assert [(s.user_id, s.displayed, s.clicks) for s in loaded] == [
            ("u1", ["a", "b"], [1, 0]),
            ("u2", ["c", "a"], [0, 1]),
        ]

    def test_yandex_log(self):
        """Test conversion of challenge log records"""
        lines = [
            "1\tM\t3\t42",
            "1\t0\tQ\t0\t100\t5,6\t11,1\t12,2\t13,3",
            "1\t5\tC\t0\t12",
            "1\t9\tC\t0\t13",
            "2\tM\t3\t7",
            "2\t0\tQ\t0\t101\t5\t21,1\t22,2\t23,3",
        ]
        sessions = list(read_yandex_log(lines, K=2))
        assert [(s.user_id, s.displayed, s.clicks) for s in sessions] == [
            ("42", ["11", "12"], [0, 1]),
            ("7", ["21", "22"], [0, 0]),
        ]

    def test_yandex_query_filter(self):
        """Test keeping only selected queries"""
        lines = [
            "1\tM\t3\t42",
            "1\t0\tQ\t0\t100\t5\t11,1\t12,2",
            "1\t4\tQ\t1\t200\t6\t31,1\t32,2",
            "1\t5\tC\t1\t31",
        ]
        sessions = list(read_yandex_log(lines, K=2, query_ids={"200"}))
        assert len(sessions) == 1
        assert sessions[0].displayed == ["31", "32"]
        assert sessions[0].clicks == [1, 0]
