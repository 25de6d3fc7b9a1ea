"""
Tests for ground-truth worlds, the feature pipeline and matrix files
"""

import io
import json

import numpy as np
import pytest

from src.click_models.models import SessionRecord
from src.click_models.simulator import simulate_session
from src.core.exceptions import InvalidArgumentError
from src.core.models import PositionWeights
from src.policies.fixed import FixedScorePolicy
from src.policies.linucb import UBMLinUCB
from src.synthetic_env.features import (
    FeatureFactorization,
    build_attractiveness_matrix,
    make_context,
    truncated_svd,
)
from src.synthetic_env.matrix_io import (
    load_matrices,
    load_matrix,
    read_matrix,
    save_matrices,
    save_matrix,
    write_matrix,
)
from src.synthetic_env.world import GroundTruthWorld, run_round


class TestGroundTruthWorld:
    """Test synthetic worlds"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights.geometric(3, 0.9)
        self.world = GroundTruthWorld.generate(5, 20, self.weights, seed=3)

    def test_assumptions_hold(self):
        """Test norm bounds and attractiveness range"""
        world = self.world
        assert float(world.theta @ world.theta) <= world.beta + 1e-12
        assert np.all(np.linalg.norm(world.contexts, axis=1) <= 1.0 + 1e-12)
        assert np.all(world.gammas >= 0.05 - 1e-9)
        assert np.all(world.gammas <= 0.95 + 1e-9)
        assert world.beta == 5.0

    def test_deterministic_given_seed(self):
        """Test identical worlds for identical seeds"""
        again = GroundTruthWorld.generate(5, 20, self.weights, seed=3)
        assert np.array_equal(again.theta, self.world.theta)
        assert np.array_equal(again.contexts, self.world.contexts)

    def test_optimal_arms(self):
        """Test the oracle list is sorted by attractiveness"""
        best = self.world.optimal_arms(3)
        gammas = self.world.gammas
        assert [gammas[i] for i in best] == sorted(gammas, reverse=True)[:3]

    def test_optimal_play_has_no_regret(self):
        """Test regret of the oracle policy"""
        oracle = FixedScorePolicy(3, self.world.optimal_scores())
        rng = np.random.default_rng(0)
        for _ in range(20):
            outcome = self.world.run_round(oracle, 3, rng)
            assert outcome.regret == pytest.approx(0.0, abs=1e-12)

    def test_single_position_regret(self):
        """Test theta* = e1 with basis contexts and K = 1"""
        weights = PositionWeights.geometric(1, 0.5)
        world = GroundTruthWorld(theta=np.array([1.0, 0.0, 0.0]), contexts=np.eye(3), weights=weights, beta=1.0)
        assert world.optimal_arms(1) == [0]
        assert world.regret([0]) == 0.0
        assert world.regret([1]) == pytest.approx(weights.w(1, 0))

    def test_invalid_world_rejected(self):
        """Test validation of hand-built worlds"""
        with pytest.raises(ValueError):
            GroundTruthWorld(
                theta=np.array([2.0, 0.0]), contexts=np.eye(2), weights=self.weights, beta=1.0
            )
        with pytest.raises(ValueError):
            GroundTruthWorld(
                theta=np.array([-0.5, 0.0]), contexts=np.eye(2), weights=self.weights, beta=1.0
            )

    def test_run_round_feeds_policy(self):
        """Test a learning policy after one round"""
        policy = UBMLinUCB(5, 3, self.weights, horizon=10)
        outcome = run_round(self.world, policy, 3, np.random.default_rng(1))
        assert policy.t == 1
        assert len(outcome.clicks) == 3
        assert outcome.regret >= -1e-12

    def test_other_click_models(self):
        """Test worlds driven by cascade-type users"""
        for model in ("CM", "DCM", "PBM"):
            world = GroundTruthWorld.generate(4, 10, self.weights, seed=2, click_model=model)
            policy = UBMLinUCB(4, 3, self.weights)
            rng = np.random.default_rng(5)
            for _ in range(10):
                outcome = world.run_round(policy, 3, rng)
                if model == "CM":
                    assert sum(outcome.clicks) <= 1

    def test_save_and_load(self, tmp_path):
        """Test world snapshot file"""
        path = self.world.save(tmp_path / "world.json")
        loaded = GroundTruthWorld.load(path)
        assert np.array_equal(loaded.theta, self.world.theta)
        assert np.array_equal(loaded.gammas, self.world.gammas)
        assert loaded.weights.table == self.world.weights.table

    def test_load_rejects_bad_snapshot(self, tmp_path):
        """Test a snapshot whose attractiveness leaves [0, 1]"""
        path = tmp_path / "world.json"
        self.world.save(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["theta"] = [10.0 * v for v in doc["theta"]]
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(InvalidArgumentError):
            GroundTruthWorld.load(path)

    def test_gamma_range(self):
        """Test attractiveness drawn inside a narrower range"""
        world = GroundTruthWorld.generate(5, 50, self.weights, seed=4, gamma_range=(0.1, 0.4))
        assert np.all(world.gammas >= 0.1 - 1e-9)
        assert np.all(world.gammas <= 0.4 + 1e-9)

    def test_stratified_profile(self):
        """Test every seed sees the same sorted attractiveness grid"""
        first = GroundTruthWorld.generate(5, 20, self.weights, seed=1, gamma_range=(0.05, 0.5), stratified=True)
        second = GroundTruthWorld.generate(5, 20, self.weights, seed=2, gamma_range=(0.05, 0.5), stratified=True)
        expected = 0.05 + 0.45 * (np.arange(20) + 0.5) / 20
        assert np.allclose(np.sort(first.gammas), expected, atol=1e-10)
        assert np.allclose(np.sort(second.gammas), expected, atol=1e-10)
        assert not np.array_equal(first.gammas, second.gammas)

    def test_invalid_gamma_range(self):
        """Test reversed attractiveness bounds"""
        with pytest.raises(InvalidArgumentError):
            GroundTruthWorld.generate(5, 20, self.weights, gamma_range=(0.6, 0.2))


class TestAttractivenessMatrix:
    """Test the position-debiased user x item matrix"""

    def setup_method(self):
        """Setup test fixtures"""
        self.weights = PositionWeights(K=2, table=[[0.5], [0.5, 0.5]])

    def test_always_clicked_is_clamped(self):
        """Test an item always shown first and always clicked"""
        sessions = [SessionRecord(user_id="u", displayed=["i", "j"], clicks=[1, 0])] * 4
        matrix = build_attractiveness_matrix(sessions, self.weights)
        assert matrix.user_ids == ["u"]
        assert matrix.item_ids == ["i", "j"]
        assert matrix.values[0].tolist() == [1.0, 0.0]
        assert matrix.clamped == 1

    def test_half_clicked(self):
        """Test an item clicked in half of its sessions"""
        sessions = [
            SessionRecord(user_id="u", displayed=["i", "j"], clicks=[1, 0]),
            SessionRecord(user_id="u", displayed=["i", "j"], clicks=[0, 0]),
        ] * 2
        matrix = build_attractiveness_matrix(sessions, self.weights)
        assert matrix.values[0, 0] == pytest.approx(1.0)
        assert matrix.clamped == 0

    def test_unseen_pairs_are_zero(self):
        """Test items a user never saw"""
        sessions = [
            SessionRecord(user_id="u", displayed=["i", "j"], clicks=[1, 0]),
            SessionRecord(user_id="v", displayed=["k", "j"], clicks=[0, 1]),
        ]
        matrix = build_attractiveness_matrix(sessions, self.weights)
        assert matrix.values[0, matrix.item_ids.index("k")] == 0.0
        assert matrix.values[1, matrix.item_ids.index("i")] == 0.0

    def test_recovers_attractiveness(self):
        """Test estimates against the gammas that generated the log"""
        weights = PositionWeights(K=2, table=[[0.9], [0.5, 0.8]])
        gammas = {
            "u1": {"a": 0.2, "b": 0.5, "c": 0.7, "d": 0.4},
            "u2": {"a": 0.6, "b": 0.1, "c": 0.3, "d": 0.8},
        }
        rng = np.random.default_rng(17)
        sessions = []
        for user, table in gammas.items():
            for _ in range(6000):
                shown = [str(x) for x in rng.permutation(list(table))[:2]]
                clicks = simulate_session("UBM", [table[i] for i in shown], weights, rng)
                sessions.append(SessionRecord(user_id=user, displayed=shown, clicks=clicks.tolist()))
        matrix = build_attractiveness_matrix(sessions, weights)
        for i, user in enumerate(matrix.user_ids):
            for j, item in enumerate(matrix.item_ids):
                assert abs(matrix.values[i, j] - gammas[user][item]) < 0.05, (user, item)

    def test_empty_log(self):
        """Test no sessions"""
        with pytest.raises(InvalidArgumentError):
            build_attractiveness_matrix([], self.weights)


class TestTruncatedSVD:
    """Test the randomized factorization"""

    def test_diagonal(self):
        """Test singular values of diag(3, 2, 1)"""
        fact = truncated_svd(np.diag([3.0, 2.0, 1.0]), rank=2, seed=0)
        assert fact.S.tolist() == pytest.approx([3.0, 2.0], abs=1e-8)
        assert fact.rank == 2
        assert fact.dimension == 4

    def test_exact_low_rank(self):
        """Test reconstruction of a rank-2 matrix"""
        rng = np.random.default_rng(1)
        M = rng.uniform(size=(50, 2)) @ rng.uniform(size=(2, 40))
        fact = truncated_svd(M, rank=2, seed=0)
        assert np.max(np.abs(fact.reconstruct() - M)) < 1e-6

    def test_near_optimal_error(self):
        """Test error against the exact truncated SVD"""
        rng = np.random.default_rng(2)
        M = (rng.uniform(size=(200, 100)) < 0.2).astype(float)
        fact = truncated_svd(M, rank=10, seed=0)
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
        best = np.linalg.norm(M - (U[:, :10] * S[:10]) @ Vt[:10])
        assert np.linalg.norm(M - fact.reconstruct()) <= 1.5 * best

    def test_orthonormal_factors(self):
        """Test U and V columns"""
        rng = np.random.default_rng(3)
        fact = truncated_svd(rng.uniform(size=(30, 20)), rank=5, seed=0)
        assert np.allclose(fact.U.T @ fact.U, np.eye(5), atol=1e-6)
        assert np.allclose(fact.V.T @ fact.V, np.eye(5), atol=1e-6)
        assert np.all(np.diff(fact.S) <= 0)

    def test_deterministic_given_seed(self):
        """Test identical sketches for identical seeds"""
        M = np.random.default_rng(4).uniform(size=(20, 15))
        a = truncated_svd(M, rank=3, seed=9)
        b = truncated_svd(M, rank=3, seed=9)
        assert np.array_equal(a.U, b.U)

    def test_rank_out_of_range(self):
        """Test rank bounds"""
        with pytest.raises(InvalidArgumentError):
            truncated_svd(np.eye(3), rank=4)
        with pytest.raises(InvalidArgumentError):
            truncated_svd(np.eye(3), rank=0)


class TestContexts:
    """Test per-pair feature vectors"""

    def setup_method(self):
        """Setup test fixtures"""
        rng = np.random.default_rng(5)
        self.fact = truncated_svd(rng.uniform(size=(40, 30)), rank=10, seed=0)

    def test_dimension(self):
        """Test context length 2 * rank"""
        assert make_context(0, 0, self.fact).shape == (20,)
        assert np.linalg.norm(make_context(3, 4, self.fact)) <= 1.0 + 1e-12

    def test_identical_users_identical_contexts(self):
        """Test contexts depend only on the factor rows"""
        U = self.fact.U.copy()
        U[1] = U[0]
        fact = FeatureFactorization(U=U, S=self.fact.S, V=self.fact.V)
        assert np.array_equal(make_context(0, 2, fact), make_context(1, 2, fact))

    def test_zero_user_row(self):
        """Test a user with no signal"""
        U = self.fact.U.copy()
        U[0] = 0.0
        fact = FeatureFactorization(U=U, S=self.fact.S, V=self.fact.V)
        x = make_context(0, 1, fact)
        assert not x[:10].any()
        assert np.allclose(x[10:], self.fact.V[1])

    def test_out_of_range(self):
        """Test index bounds"""
        with pytest.raises(InvalidArgumentError):
            make_context(40, 0, self.fact)
        with pytest.raises(InvalidArgumentError):
            make_context(0, -1, self.fact)

    def test_context_by_id_and_files(self, tmp_path):
        """Test id lookup survives saving and loading"""
        self.fact.user_ids = [f"u{i}" for i in range(40)]
        self.fact.item_ids = [f"i{j}" for j in range(30)]
        path = self.fact.save(tmp_path / "fact.bin")
        loaded = FeatureFactorization.load(path)
        assert np.array_equal(loaded.S, self.fact.S)
        assert np.array_equal(loaded.context_for("u3", "i7"), make_context(3, 7, self.fact))
        with pytest.raises(InvalidArgumentError):
            loaded.context_for("nobody", "i7")


class TestMatrixFiles:
    """Test the binary matrix format"""

    def test_blocks_in_one_file(self, tmp_path):
        """Test several matrices back to back"""
        a = np.arange(6, dtype=float).reshape(2, 3)
        b = np.array([1.5, -2.0])
        path = save_matrices(tmp_path / "m.bin", [a, b])
        blocks = load_matrices(path)
        assert np.array_equal(blocks[0], a)
        assert blocks[1].shape == (1, 2)

    def test_single_matrix(self, tmp_path):
        """Test the one-matrix helpers"""
        a = np.eye(3)
        assert np.array_equal(load_matrix(save_matrix(tmp_path / "eye.bin", a)), a)

    def test_header_layout(self):
        """Test magic and dimensions"""
        buffer = io.BytesIO()
        write_matrix(buffer, np.zeros((2, 5)))
        raw = buffer.getvalue()
        assert raw[:8] == b"UBMMAT01"
        assert np.frombuffer(raw[8:16], dtype="<u4").tolist() == [2, 5]
        assert len(raw) == 16 + 2 * 5 * 8

    def test_bad_magic(self):
        """Test rejection of foreign files"""
        with pytest.raises(InvalidArgumentError):
            read_matrix(io.BytesIO(b"NOTAMAT!" + bytes(8)))
