import numpy as np
import pytest

from mechxai import tensornet as tn
from mechxai import xai
from mechxai.constitutive import MaterialRecord
from mechxai.errors import UsageError


def lstm_model(width=8, input_dim=1, seed=0, layers=None):
    if layers is None:
        layers = (tn.LayerSpec("lstm", width),
                  tn.LayerSpec("time_distributed_dense", 1, "linear"))
    cfg = tn.NetworkConfig(input_dim=input_dim, layers=layers, dtype="f64")
    return tn.Model(config=cfg, params=tn.init_params(cfg, np.random.default_rng(seed)))


def fake_record(inputs, histories=None):
    x = np.asarray(inputs, dtype=float)
    return MaterialRecord(model_kind="elastoplastic", driving=None, inputs=x,
                          targets=np.zeros((x.shape[0], 1)), target_names=("stress",),
                          histories=histories or {})


# ---------------------------------------------------------------------------
# Cell-state collection
# ---------------------------------------------------------------------------

class TestCollectCellStates:
    def test_single_lstm_width_52(self):
        model = lstm_model(width=52)
        x = np.random.default_rng(1).standard_normal((200, 1))
        states = xai.collect_cell_states(model, x)
        assert states.values.shape == (200, 52)

    def test_stacked_cells_concatenate(self):
        layers = (tn.LayerSpec("lstm", 8), tn.LayerSpec("gru", 4),
                  tn.LayerSpec("time_distributed_dense", 1, "linear"))
        model = lstm_model(layers=layers)
        x = np.random.default_rng(2).standard_normal((200, 1))
        states = xai.collect_cell_states(model, x)
        assert states.values.shape == (200, 12)
        assert [(s[1], s[2], s[3]) for s in states.layer_slices] == [("lstm", 0, 8),
                                                                     ("gru", 8, 12)]

    def test_dense_only_model_rejected(self):
        layers = (tn.LayerSpec("dense", 8, "rect"),
                  tn.LayerSpec("time_distributed_dense", 1, "linear"))
        model = lstm_model(layers=layers)
        with pytest.raises(UsageError, match="dense only"):
            xai.collect_cell_states(model, np.zeros((10, 1)))

    def test_zero_model_zero_input_gives_zero_states(self):
        model = lstm_model(width=4)
        model.params = tn.tree_map(np.zeros_like, model.params)
        states = xai.collect_cell_states(model, np.zeros((30, 1)))
        assert np.all(states.values == 0.0)

    def test_normalization_applied_when_present(self):
        model = lstm_model(width=4)
        x = np.random.default_rng(3).standard_normal((20, 1)) * 2 + 5
        raw = xai.collect_cell_states(model, x).values
        model.normalization = {"input_mean": [5.0], "input_std": [2.0],
                               "target_mean": [0.0], "target_std": [1.0]}
        standardized = xai.collect_cell_states(model, fake_record(x)).values
        assert not np.allclose(raw, standardized)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

class TestPca:
    def test_rank_one_structure(self):
        t = np.linspace(0, 1, 40)
        c = np.column_stack([t, 2.0 * t])  # perfectly correlated columns
        result = xai.pca(c)
        assert result.singular_values[0] > 1e-8
        assert result.singular_values[1] < 1e-12

    def test_two_dimensional_hand_case(self):
        # points on the line y = x/2: leading direction is (2, 1)/sqrt(5)
        c = np.array([[1.0, 0.5], [-1.0, -0.5], [2.0, 1.0], [-2.0, -1.0]])
        result = xai.pca(c)
        lead = result.components[:, 0]
        expected = np.array([2.0, 1.0]) / np.sqrt(5.0)
        assert abs(abs(lead @ expected) - 1.0) < 1e-12

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        c = rng.standard_normal((25, 6))
        r = xai.pca(c)
        np.testing.assert_allclose(r.scores @ r.components.T + r.mean, c, atol=1e-8)

    def test_orthonormal_components_sorted_values(self):
        rng = np.random.default_rng(1)
        c = rng.standard_normal((40, 8)) @ np.diag([5, 3, 2, 1, 0.5, 0.2, 0.1, 0.05])
        r = xai.pca(c)
        np.testing.assert_allclose(r.components.T @ r.components, np.eye(8), atol=1e-8)
        assert np.all(np.diff(r.singular_values) <= 1e-12)

    def test_covariance_eigenvalue_oracle(self):
        # brute-force covariance eigenvalues vs squared singular values
        rng = np.random.default_rng(2)
        for _ in range(50):
            t = int(rng.integers(5, 51))
            f = int(rng.integers(2, 21))
            c = rng.standard_normal((t, f)) * rng.uniform(0.5, 3.0)
            r = xai.pca(c)
            centered = c - c.mean(axis=0)
            eigvals = np.sort(np.linalg.eigvalsh(centered.T @ centered / (t - 1)))[::-1]
            sv_sq = (r.singular_values**2) / (t - 1)
            k = min(len(eigvals), len(sv_sq))
            np.testing.assert_allclose(sv_sq[:k], eigvals[:k], atol=1e-8)

    def test_scores_decorrelated(self):
        rng = np.random.default_rng(3)
        c = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 5))
        r = xai.pca(c)
        cov = r.scores.T @ r.scores
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) <= 1e-8 * cov[0, 0]

    def test_rotation_leaves_singular_values(self):
        rng = np.random.default_rng(4)
        c = rng.standard_normal((30, 6))
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        r1, r2 = xai.pca(c), xai.pca(c @ q)
        np.testing.assert_allclose(r1.singular_values, r2.singular_values, atol=1e-8)

    def test_constant_matrix_is_degenerate_not_an_error(self):
        r = xai.pca(np.full((10, 3), 2.5))
        assert np.all(r.singular_values < 1e-12)
        assert np.all(r.scores == 0.0)

    def test_scaled_scores_have_unit_like_spread(self):
        rng = np.random.default_rng(5)
        c = rng.standard_normal((50, 4)) * np.array([10.0, 3.0, 1.0, 0.3])
        r = xai.pca(c)
        scaled = r.scaled_scores()
        assert scaled.shape == r.scores.shape
        # alignment statistics are scale invariant between raw and scaled scores
        series = rng.standard_normal(50)
        raw_r = xai.affine_align(r.scores[:, 0], series).r
        scl_r = xai.affine_align(scaled[:, 0], series).r
        assert raw_r == pytest.approx(scl_r, abs=1e-12)

    def test_too_short_input_rejected(self):
        with pytest.raises(UsageError):
            xai.pca(np.zeros((1, 4)))


class TestImportance:
    def test_hand_values(self):
        linear, squared, degenerate = xai.importance_ratios(np.array([3.0, 1.0]))
        np.testing.assert_allclose(linear, [0.75, 0.25], atol=1e-15)
        np.testing.assert_allclose(squared, [0.9, 0.1], atol=1e-15)
        assert not degenerate

    def test_single_component(self):
        linear, squared, _ = xai.importance_ratios(np.array([2.0]))
        assert linear.tolist() == [1.0] and squared.tolist() == [1.0]

    def test_all_zero_flagged(self):
        linear, squared, degenerate = xai.importance_ratios(np.zeros(3))
        assert degenerate
        assert np.all(linear == 0.0) and np.all(squared == 0.0)

    def test_both_variants_sum_to_one(self):
        sv = np.random.default_rng(0).uniform(0.1, 5.0, size=7)
        linear, squared, _ = xai.importance_ratios(np.sort(sv)[::-1])
        assert linear.sum() == pytest.approx(1.0, abs=1e-12)
        assert squared.sum() == pytest.approx(1.0, abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(UsageError):
            xai.importance_ratios(np.array([1.0, -0.1]))


class TestAffineAlign:
    def test_exact_affine_relation(self):
        score = np.linspace(-1, 1, 50)
        history = -2.0 * score + 5.0
        stat = xai.affine_align(score, history)
        assert stat.slope == pytest.approx(-2.0, abs=1e-12)
        assert stat.intercept == pytest.approx(5.0, abs=1e-12)
        assert abs(stat.r) == pytest.approx(1.0, abs=1e-12)
        assert stat.r2 == pytest.approx(1.0, abs=1e-12)

    def test_independent_noise_uncorrelated(self):
        rng = np.random.default_rng(6)
        stat = xai.affine_align(rng.standard_normal(10_000), rng.standard_normal(10_000))
        assert abs(stat.r) < 0.05

    def test_constant_score_flagged(self):
        stat = xai.affine_align(np.full(20, 3.0), np.linspace(0, 1, 20))
        assert stat.degenerate and stat.r == 0.0

    def test_r2_is_r_squared(self):
        rng = np.random.default_rng(7)
        s = rng.standard_normal(200)
        q = 0.7 * s + 0.3 * rng.standard_normal(200)
        stat = xai.affine_align(s, q)
        assert stat.r2 == pytest.approx(stat.r**2, abs=1e-12)

    def test_length_checks(self):
        with pytest.raises(UsageError):
            xai.affine_align(np.zeros(3), np.zeros(4))


# ---------------------------------------------------------------------------
# Full explanation reports
# ---------------------------------------------------------------------------

class TestExplain:
    def test_affine_image_of_history_aligns_perfectly(self):
        # a state matrix that is an exact affine image of the history variable
        rng = np.random.default_rng(8)
        t = np.linspace(0, 1, 120)
        eps_p = np.cumsum(np.maximum(np.sin(7 * t), 0.0))
        gains = rng.uniform(-2, 2, size=6)
        offsets = rng.uniform(-1, 1, size=6)
        states = xai.StateMatrix(values=np.outer(eps_p, gains) + offsets, layer_slices=[])
        report = xai.explain_states(states, {"plastic_strain": eps_p})
        best = report.best_alignment("plastic_strain")
        assert best.component == 1
        assert abs(best.r) >= 1.0 - 1e-9
        assert report.importance_linear[0] == pytest.approx(1.0, abs=1e-9)

    def test_zero_trace_end_to_end_degenerate(self):
        model = lstm_model(width=5)
        model.params = tn.tree_map(np.zeros_like, model.params)
        record = fake_record(np.zeros((40, 1)), {"plastic_strain": np.linspace(0, 1, 40)})
        report = xai.explain(model, record)
        assert report.degenerate
        assert report.alignment == []
        assert report.component_scores == {}

    def test_real_model_report_structure(self):
        model = lstm_model(width=6)
        rng = np.random.default_rng(9)
        x = rng.standard_normal((50, 1))
        record = fake_record(x, {"plastic_strain": np.cumsum(np.abs(x[:, 0])),
                                 "back_stress": rng.standard_normal(50)})
        report = xai.explain(model, record, sample_id="s1", model_ref="m1")
        assert set(report.component_scores) == {"I", "II", "III"}
        assert len(report.alignment) == 6  # 3 components x 2 history variables
        pairs = {(a.component, a.history) for a in report.alignment}
        assert (1, "plastic_strain") in pairs and (3, "back_stress") in pairs
        assert sum(report.importance_linear) == pytest.approx(1.0, abs=1e-9)

    def test_sign_and_scale_insensitivity(self):
        rng = np.random.default_rng(10)
        values = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 5))
        hist = {"q": np.cumsum(rng.standard_normal(60))}
        reports = [xai.explain_states(xai.StateMatrix(v, []), hist)
                   for v in (values, -values, 3.0 * values)]
        rs = [[abs(a.r) for a in rep.alignment] for rep in reports]
        imps = [rep.importance_linear for rep in reports]
        for other_r, other_i in zip(rs[1:], imps[1:]):
            np.testing.assert_allclose(other_r, rs[0], atol=1e-9)
            np.testing.assert_allclose(other_i, imps[0], atol=1e-9)

    def test_report_round_trips_losslessly(self):
        model = lstm_model(width=4)
        rng = np.random.default_rng(11)
        x = rng.standard_normal((30, 1))
        record = fake_record(x, {"plastic_strain": np.cumsum(np.abs(x[:, 0]))})
        report = xai.explain(model, record, sample_id="test[0]", model_ref="abc")
        back = xai.ExplanationReport.from_dict(report.to_dict())
        assert back == report
