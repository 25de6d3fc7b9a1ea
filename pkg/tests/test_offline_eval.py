"""
Tests for propensities, the UBM-IPS reward estimator and replay evaluation
"""

import numpy as np
import pandas as pd
import pytest

from src.click_models.models import SessionRecord
from src.click_models.simulator import marginal_click_probs, simulate_session
from src.core.exceptions import EvaluationError, InvalidArgumentError
from src.core.models import PositionWeights, slot_index
from src.offline_eval.estimator import build_propensities, sample_last_click, simulate_item_reward
from src.offline_eval.metrics import CTRTracker, ctr_metrics
from src.offline_eval.models import GroupBy, ReplayDataset
from src.offline_eval.replay import TRACE_COLUMNS, one_hot_contexts, replay_evaluate
from src.policies.fixed import FixedScorePolicy
from src.policies.linucb import UBMLinUCB


def record(displayed, clicks, user="u"):
    return SessionRecord(
        user_id=user, displayed=[str(x) for x in displayed], clicks=[int(c) for c in clicks]
    )


class TestReplayDataset:
    """Test grouping of logged records"""

    def test_group_by_displayed(self):
        """Test groups keyed by the displayed multiset"""
        dataset = ReplayDataset.from_sessions(
            [record("ab", [1, 0]), record("ba", [0, 0]), record("ac", [0, 1])], K=2
        )
        assert dataset.keys == ["a|b", "a|c"]
        assert dataset.groups["a|b"].size == 2
        assert dataset.groups["a|b"].click_count("a") == 1
        assert dataset.items == ["a", "b", "c"]
        assert dataset.n_records == 3

    def test_group_by_user(self):
        """Test groups keyed by user with the union of shown arms"""
        dataset = ReplayDataset.from_sessions(
            [record("ab", [1, 0], "u1"), record("ca", [0, 0], "u1"), record("bc", [0, 1], "u2")],
            K=2,
            group_by="user",
        )
        assert dataset.group_by is GroupBy.USER
        assert dataset.groups["u1"].candidates == ["a", "b", "c"]
        assert dataset.groups["u2"].candidates == ["b", "c"]

    def test_long_records_truncated(self):
        """Test records longer than K"""
        dataset = ReplayDataset.from_sessions([record("abc", [0, 0, 1])], K=2)
        group = dataset.groups["a|b"]
        assert group.records[0].clicks == [0, 0]

    def test_short_records_rejected(self):
        """Test records shorter than K"""
        with pytest.raises(InvalidArgumentError):
            ReplayDataset.from_sessions([record("a", [1])], K=2)

    def test_empty_and_unknown_grouping(self):
        """Test invalid datasets"""
        with pytest.raises(InvalidArgumentError):
            ReplayDataset.from_sessions([], K=2)
        with pytest.raises(InvalidArgumentError):
            ReplayDataset.from_sessions([record("ab", [0, 0])], K=2, group_by="query")


class TestPropensities:
    """Test the empirical logging distribution"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights.geometric(3, 0.5)

    def test_singleton_group(self):
        """Test a group with one record"""
        dataset = ReplayDataset.from_sessions([record("xya", [1, 0, 1])], K=3)
        table = build_propensities(dataset, self.weights)
        key = dataset.keys[0]
        assert table.vector(key, "x")[slot_index(1, 0)] == 1.0
        assert table.vector(key, "y")[slot_index(2, 1)] == 1.0
        assert table.vector(key, "a")[slot_index(3, 1)] == 1.0
        for arm in "xya":
            assert table.vector(key, arm).sum() == 1.0

    def test_deterministic_logger(self):
        """Test an arm always logged at position 1"""
        dataset = ReplayDataset.from_sessions(
            [record("ab", [0, 1]), record("ab", [1, 1]), record("ab", [0, 0])], K=2
        )
        table = build_propensities(dataset, self.weights)
        assert table.vector("a|b", "a")[slot_index(1, 0)] == 1.0
        b = table.vector("a|b", "b")
        assert b[slot_index(2, 0)] == pytest.approx(2 / 3)
        assert b[slot_index(2, 1)] == pytest.approx(1 / 3)

    def test_randomized_logger(self):
        """Test uniform random order of two arms"""
        rng = np.random.default_rng(8)
        n = 10_000
        records = [record("ab" if rng.random() < 0.5 else "ba", [0, 0]) for _ in range(n)]
        table = build_propensities(ReplayDataset.from_sessions(records, K=2), self.weights)
        share = table.vector("a|b", "a")[slot_index(1, 0)]
        assert abs(share - 0.5) < 3 * np.sqrt(0.25 / n)
        assert table.vector("a|b", "a")[slot_index(2, 0)] == pytest.approx(1 - share)

    def test_missing_pair_is_zero(self):
        """Test arms never logged in a group"""
        dataset = ReplayDataset.from_sessions([record("ab", [0, 0])], K=2)
        table = build_propensities(dataset, self.weights)
        assert not table.vector("a|b", "z").any()

    def test_weights_too_short(self):
        """Test weights covering fewer positions than the dataset"""
        dataset = ReplayDataset.from_sessions([record("abc", [0, 0, 0])], K=3)
        with pytest.raises(InvalidArgumentError):
            build_propensities(dataset, PositionWeights.geometric(2, 0.5))


class TestItemReward:
    """Test the per-item unbiased reward"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights.geometric(3, 0.5)

    def test_same_slot_as_logged(self):
        """Test Phi equal to the logging slot gives the empirical click rate"""
        dataset = ReplayDataset.from_sessions(
            [record("ab", [1, 0]), record("ab", [1, 0]), record("ab", [1, 1]), record("ab", [0, 0])],
            K=2,
        )
        table = build_propensities(dataset, self.weights)
        group = dataset.groups["a|b"]
        assert simulate_item_reward("a", (1, 0), group, self.weights, table) == pytest.approx(0.75)

    def test_ratio_of_weights(self):
        """Test moving an arm from slot (3, 1) to slot (1, 0)"""
        dataset = ReplayDataset.from_sessions([record("xya", [1, 0, 1])], K=3)
        table = build_propensities(dataset, self.weights)
        group = dataset.groups[dataset.keys[0]]
        reward = simulate_item_reward("a", (1, 0), group, self.weights, table)
        assert reward == pytest.approx(self.weights.w(1, 0) / self.weights.w(3, 1))
        assert reward == pytest.approx(2.0)

    def test_unclicked_arm(self):
        """Test an arm without logged clicks"""
        dataset = ReplayDataset.from_sessions([record("xya", [1, 0, 1])], K=3)
        table = build_propensities(dataset, self.weights)
        group = dataset.groups[dataset.keys[0]]
        assert simulate_item_reward("y", (1, 0), group, self.weights, table) == 0.0

    def test_zero_examination_mass(self):
        """Test an arm with no examined logging mass"""
        weights = PositionWeights(K=1, table=[[0.0]])
        dataset = ReplayDataset.from_sessions([record("a", [0])], K=1)
        table = build_propensities(dataset, weights)
        with pytest.raises(EvaluationError) as exc:
            simulate_item_reward("a", (1, 0), dataset.groups["a"], weights, table)
        assert exc.value.group_key == "a"
        assert exc.value.arm == "a"


class TestSampleLastClick:
    """Test the Bernoulli click draw"""

    def test_certain_and_impossible(self):
        """Test rewards at or above one and zero"""
        assert sample_last_click(1.3, 0) == 1
        assert sample_last_click(1.0, 0) == 1
        assert sample_last_click(0.0, 0) == 0

    def test_negative_rejected(self):
        """Test negative rewards"""
        with pytest.raises(InvalidArgumentError):
            sample_last_click(-0.1, 0)

    def test_bernoulli_rate(self):
        """Test click frequency for reward 0.4"""
        rng = np.random.default_rng(21)
        n = 100_000
        rate = np.mean([sample_last_click(0.4, rng) for _ in range(n)])
        assert abs(rate - 0.4) < 3 * np.sqrt(0.24 / n)


class TestMetrics:
    """Test CTR metrics"""

    def test_example(self):
        """Test a three-round trace"""
        ctr_sum, ctr_set = ctr_metrics([[1, 0], [0, 0], [1, 1]])
        assert ctr_sum == pytest.approx(1.0)
        assert ctr_set == pytest.approx(2 / 3)

    def test_empty_trace(self):
        """Test no rounds"""
        with pytest.raises(InvalidArgumentError):
            ctr_metrics([])

    def test_tracker_real_rewards(self):
        """Test running means with real-valued rewards"""
        tracker = CTRTracker()
        assert tracker.ctr_sum == 0.0
        tracker.add([0.5, 1.5], 1)
        tracker.add([0.0, 0.0], 0)
        assert tracker.ctr_sum == pytest.approx(1.0)
        assert tracker.ctr_set == pytest.approx(0.5)
        assert tracker.rounds == 2

    def test_binary_bounds(self):
        """Test 0 <= CTR_set <= CTR_sum <= K on binary traces"""
        rng = np.random.default_rng(2)
        trace = rng.integers(0, 2, size=(200, 4)).tolist()
        ctr_sum, ctr_set = ctr_metrics(trace)
        assert 0.0 <= ctr_set <= ctr_sum <= 4.0


class TestReplay:
    """Test sequential replay evaluation"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights.geometric(3, 0.5)
        self.target = FixedScorePolicy(3, {"a": 3.0, "b": 2.0, "c": 1.0})

    def test_target_equals_logger(self):
        """Test replaying the logging policy on a deterministic log"""
        dataset = ReplayDataset.from_sessions([record("abc", [1, 0, 1])] * 5, K=3)
        result = replay_evaluate(self.target, dataset, self.weights, seed=0, rounds=20)
        assert result.ctr_sum == 2.0
        assert result.ctr_set == 1.0
        assert result.skipped == 0
        assert set(result.trace["kprime_vector"]) == {"0;1;1"}

    def test_trace_layout(self, tmp_path):
        """Test per-round trace columns and CSV output"""
        dataset = ReplayDataset.from_sessions([record("abc", [1, 0, 1]), record("bca", [0, 1, 0])], K=3)
        result = replay_evaluate(self.target, dataset, self.weights, seed=1, rounds=10)
        assert list(result.trace.columns) == TRACE_COLUMNS
        assert result.trace["round"].tolist() == list(range(1, 11))
        assert set(result.trace["selected_ids"]) == {"a;b;c"}
        path = result.to_csv(tmp_path / "trace.csv")
        assert list(pd.read_csv(path).columns) == TRACE_COLUMNS

    def test_deterministic_given_seed(self):
        """Test identical traces for identical seeds"""
        records = []
        rng = np.random.default_rng(3)
        for _ in range(60):
            order = rng.permutation(["a", "b", "c", "d"])[:3]
            records.append(record(order, rng.integers(0, 2, size=3)))
        dataset = ReplayDataset.from_sessions(records, K=3, group_by="user")
        runs = []
        for _ in range(2):
            policy = UBMLinUCB(4, 3, self.weights)
            runs.append(replay_evaluate(policy, dataset, self.weights, seed=7, rounds=50))
        assert runs[0].trace.equals(runs[1].trace)
        assert runs[0].ctr_sum == runs[1].ctr_sum

    def test_policy_learns_from_sampled_clicks(self):
        """Test the evaluated policy advances once per evaluated round"""
        dataset = ReplayDataset.from_sessions([record("abc", [1, 0, 1])] * 3, K=3)
        policy = UBMLinUCB(3, 3, self.weights)
        replay_evaluate(policy, dataset, self.weights, seed=0, rounds=12)
        assert policy.t == 12

    def test_skipped_rounds(self):
        """Test rounds without examined logging mass"""
        weights = PositionWeights(K=1, table=[[0.0]])
        dataset = ReplayDataset.from_sessions([record("a", [1]), record("a", [0])], K=1)
        policy = FixedScorePolicy(1, {"a": 1.0})
        result = replay_evaluate(policy, dataset, weights, seed=0, rounds=5)
        assert result.skipped == 5
        assert result.ctr_sum == 0.0
        assert result.ctr_set == 0.0
        assert result.trace["F"].isna().all()
        assert policy.t == 0

    def test_invalid_arguments(self):
        """Test K and rounds preconditions"""
        dataset = ReplayDataset.from_sessions([record("ab", [0, 0])], K=2)
        with pytest.raises(InvalidArgumentError):
            replay_evaluate(self.target, dataset, self.weights, K=3)
        with pytest.raises(InvalidArgumentError):
            replay_evaluate(self.target, dataset, self.weights, rounds=0)

    def test_one_hot_contexts(self):
        """Test the default item encoding"""
        dataset = ReplayDataset.from_sessions([record("ab", [0, 0]), record("cb", [0, 1])], K=2)
        context = one_hot_contexts(dataset)
        assert context(dataset.groups["a|b"], "b").tolist() == [0.0, 1.0, 0.0]

    def test_unbiased_for_fixed_policy(self):
        """Test the replay estimate against the true expected clicks of a fixed list"""
        weights = PositionWeights(K=2, table=[[0.9], [0.4, 0.7]])
        gammas = {
            "u1": {"a": 0.6, "b": 0.3, "c": 0.5},
            "u2": {"a": 0.2, "b": 0.7, "c": 0.4},
        }
        orderings = [(x, y) for x in "abc" for y in "abc" if x != y]
        truth = np.mean(
            [
                marginal_click_probs("UBM", [g["a"], g["b"]], weights).sum()
                for g in gammas.values()
            ]
        )
        rng = np.random.default_rng(99)
        estimates = []
        for _ in range(200):
            records = []
            for _ in range(500):
                user = "u1" if rng.random() < 0.5 else "u2"
                shown = orderings[int(rng.integers(len(orderings)))]
                clicks = simulate_session("UBM", [gammas[user][i] for i in shown], weights, rng)
                records.append(record(shown, clicks.tolist(), user))
            dataset = ReplayDataset.from_sessions(records, K=2, group_by="user")
            policy = FixedScorePolicy(2, {"a": 3.0, "b": 2.0, "c": 1.0})
            result = replay_evaluate(policy, dataset, weights, seed=rng, rounds=400)
            assert result.skipped == 0
            estimates.append(result.ctr_sum)
        estimates = np.array(estimates)
        se = estimates.std(ddof=1) / np.sqrt(len(estimates))
        assert abs(estimates.mean() - truth) < 3 * se
