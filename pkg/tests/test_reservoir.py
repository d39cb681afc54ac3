import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compforce.config import ExperimentConfig
from compforce.reservoir import (DimensionError, EsnModel, ReservoirState, SparseMatrix,
                                 build_esn, load_model, readout, reservoir_step, save_model,
                                 spectral_diagnostic)
from compforce.rng import SeededRng


def small_model(n=3, alpha=0.1, dense=None, leak_current=False):
    W = SparseMatrix.from_dense(np.zeros((n, n)) if dense is None else dense)
    return EsnModel(W, np.ones(n), np.ones(n), np.zeros(n), 0.1, 1.0, alpha, leak_current)


class TestSparseMatrix:
    def test_dense_round_trip(self):
        rng = np.random.default_rng(0)
        d = rng.standard_normal((6, 6)) * (rng.random((6, 6)) < 0.4)
        S = SparseMatrix.from_dense(d)
        np.testing.assert_array_equal(S.to_dense(), d)
        x = rng.standard_normal(6)
        np.testing.assert_allclose(S.matvec(x), d @ x, rtol=1e-14)

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SparseMatrix.from_triplets(3, [0, 0], [1, 1], [1.0, 2.0])

    def test_rejects_out_of_range(self):
        with pytest.raises(DimensionError):
            SparseMatrix.from_triplets(3, [3], [0], [1.0])

    def test_rejects_zero_values(self):
        with pytest.raises(ValueError):
            SparseMatrix.from_triplets(3, [0], [0], [0.0])


class TestBuild:
    def test_default_size_and_ranges(self):
        m = build_esn(ExperimentConfig(seed=3))
        # Binomial(10^4, 0.1): mean 1000, sd 30
        assert abs(m.W.nnz - 1000) < 5 * 30
        assert np.all(np.abs(m.W.data) <= 1.25)
        assert np.all(np.abs(m.W_in) <= 1.0) and np.all(np.abs(m.W_fb) <= 1.0)
        assert np.linalg.norm(m.W_out) == 0.0

    def test_nearly_dense(self):
        m = build_esn(ExperimentConfig(n_neurons=10, connectivity=0.999999, seed=1))
        assert m.W.nnz == 100

    def test_deterministic(self):
        a = build_esn(ExperimentConfig(seed=11))
        b = build_esn(ExperimentConfig(seed=11))
        np.testing.assert_array_equal(a.W.to_dense(), b.W.to_dense())
        np.testing.assert_array_equal(a.W_in, b.W_in)
        np.testing.assert_array_equal(a.W_fb, b.W_fb)

    def test_substreams_independent_of_other_sizes(self):
        # W_in/W_fb draws are keyed by name, not by how much W consumed
        a = build_esn(ExperimentConfig(seed=4, connectivity=0.05))
        b = build_esn(ExperimentConfig(seed=4, connectivity=0.5))
        np.testing.assert_array_equal(a.W_in, b.W_in)
        np.testing.assert_array_equal(a.W_fb, b.W_fb)

    def test_nonzero_count_over_seeds(self):
        n, p = 100, 0.1
        mean, sd = p * n * n, np.sqrt(n * n * p * (1 - p))
        for seed in range(20):
            m = build_esn(ExperimentConfig(seed=seed), SeededRng(seed))
            assert abs(m.W.nnz - mean) < 5 * sd
        vals = np.concatenate([build_esn(ExperimentConfig(seed=s)).W.data for s in range(20)])
        assert vals.min() >= -1.25 and vals.max() <= 1.25
        # the empirical range fills the scaled interval
        assert vals.min() < -1.2 and vals.max() > 1.2


class TestStep:
    def test_zero_state_zero_input(self):
        m = small_model()
        s = reservoir_step(m, ReservoirState.zeros(3), 0.0, 0.0)
        np.testing.assert_array_equal(s.x, 0.0)
        np.testing.assert_array_equal(s.r, 0.0)
        assert s.k == 1

    def test_leak_uses_previous_x(self):
        m = small_model(alpha=0.1)
        s = ReservoirState(np.ones(3), np.zeros(3))
        out = reservoir_step(m, s, 0.0, 0.0)
        np.testing.assert_allclose(out.r, 0.1, rtol=0, atol=1e-15)

    def test_leak_free_limit_copies_previous_x(self):
        m = small_model(alpha=1.0)
        x_prev = np.array([0.3, -0.2, 0.9])
        out = reservoir_step(m, ReservoirState(x_prev, np.array([5.0, -5.0, 2.0])), 0.7, 0.1)
        np.testing.assert_array_equal(out.r, x_prev)

    def test_leak_current_variant(self):
        m = small_model(alpha=1.0, leak_current=True)
        out = reservoir_step(m, ReservoirState(np.zeros(3), np.zeros(3)), 0.5, 0.0)
        np.testing.assert_array_equal(out.r, out.x)
        np.testing.assert_allclose(out.x, np.tanh(0.5))

    def test_update_formula(self):
        rng = np.random.default_rng(2)
        d = rng.uniform(-1, 1, (4, 4))
        m = EsnModel(SparseMatrix.from_dense(d), rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4),
                     np.zeros(4), 1.0, 1.0, 0.3)
        x0, r0 = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)
        out = reservoir_step(m, ReservoirState(x0, r0), 0.4, -0.6)
        np.testing.assert_allclose(out.x, np.tanh(m.W_in * 0.4 + d @ x0 + m.W_fb * -0.6),
                                   rtol=1e-14)
        np.testing.assert_allclose(out.r, 0.7 * r0 + 0.3 * x0, rtol=1e-14)

    def test_non_finite_input_raises_with_step(self):
        from compforce.reservoir import NumericalError
        m = small_model()
        with pytest.raises(NumericalError) as exc:
            reservoir_step(m, ReservoirState(np.zeros(3), np.zeros(3), 0.0, 41), np.nan, 0.0)
        assert exc.value.step == 42


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), alpha=st.floats(0.01, 1.0), steps=st.integers(1, 200),
       amp=st.floats(0.0, 50.0))
def test_state_bounds(seed, alpha, steps, amp):
    cfg = ExperimentConfig(n_neurons=20, leak_rate=alpha, seed=seed)
    m = build_esn(cfg)
    rng = np.random.default_rng(seed)
    s = ReservoirState.zeros(20)
    for _ in range(steps):
        s = reservoir_step(m, s, rng.uniform(-amp, amp), rng.uniform(-amp, amp))
        assert np.all(np.abs(s.x) <= 1.0)
        assert np.all(np.abs(s.r) <= 1.0)


class TestReadout:
    def test_zero_activation(self):
        m = small_model(2)
        m.W_out = np.array([3.0, -1.0])
        assert readout(m, np.zeros(2)) == 0.0

    def test_zero_weights(self):
        assert readout(small_model(2), np.array([0.4, 9.0])) == 0.0

    def test_hand_dot(self):
        m = small_model(2)
        m.W_out = np.array([3.0, -1.0])
        assert readout(m, np.array([1.0, 2.0])) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            readout(small_model(2), np.ones(3))


class TestSpectral:
    def test_scaled_identity(self):
        assert spectral_diagnostic(2.5 * np.eye(8)) == pytest.approx(2.5, rel=0.01)

    def test_zero(self):
        assert spectral_diagnostic(np.zeros((5, 5))) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_random_reservoir_against_eigvals(self, seed):
        m = build_esn(ExperimentConfig(seed=seed))
        oracle = np.abs(np.linalg.eigvals(m.W.to_dense())).max()
        est = spectral_diagnostic(m)
        assert est == pytest.approx(oracle, rel=0.01)
        assert est > 1.0

    def test_unconverged_reports_none(self):
        # two estimates are needed; the second would take 512 products
        W = np.array([[1.0, 0.0], [0.0, -0.999]])
        assert spectral_diagnostic(W, tol=1e-12, max_iter=300) is None


def test_snapshot_round_trip(tmp_path):
    m = build_esn(ExperimentConfig(n_neurons=30, seed=9))
    m.W_out = np.linspace(-1, 1, 30)
    state = ReservoirState(np.full(30, 0.1), np.full(30, -0.2), 0.5, 77)
    path = tmp_path / "model.npz"
    save_model(path, m, state)
    m2, s2 = load_model(path)
    np.testing.assert_array_equal(m2.W.to_dense(), m.W.to_dense())
    for name in ("W_in", "W_fb", "W_out"):
        np.testing.assert_array_equal(getattr(m2, name), getattr(m, name))
    assert (m2.connectivity, m2.chaos_factor, m2.leak_rate) == (m.connectivity, m.chaos_factor,
                                                                m.leak_rate)
    np.testing.assert_array_equal(s2.x, state.x)
    assert (s2.z_prev, s2.k) == (0.5, 77)
