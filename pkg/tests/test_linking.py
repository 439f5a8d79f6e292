import numpy as np
import pytest

from conftest import brute_force_scores, koopman, random_decomposition
from speclink import linking, operators
from speclink.errors import BasisMismatchError, DegenerateDataError, InputDataError, PipelineError
from speclink.koopman import build_pairs, decompose, estimate
from speclink.main import load_preset
from speclink.schemas import (
    BasisSpec,
    ExperimentConfig,
    InitialConditionConfig,
    PdeSpec,
    PdeTerm,
    SpectralDecomposition,
)
from speclink.simulate import ensemble, simulate_many


def decomposition(eigenvalues, vectors) -> SpectralDecomposition:
    vectors = np.asarray(vectors, dtype=complex)
    return SpectralDecomposition(
        eigenvalues=np.asarray(eigenvalues, dtype=complex),
        eigenvectors=vectors,
        residuals=np.zeros(len(eigenvalues)),
    )


def dummy_spec(name: str) -> PdeSpec:
    return PdeSpec(name=name, dims=1, terms=[PdeTerm(coefficient=1.0, derivative_orders=(1,))])


@pytest.fixture
def small_config() -> ExperimentConfig:
    return ExperimentConfig(
        basis=BasisSpec.square(4),
        dt=0.002,
        horizon=0.01,
        initial_condition=InitialConditionConfig(seeds=[1, 2], ensemble_size=16),
    )


class TestMetrics:
    def test_self_distance_and_similarity(self, rng):
        dec = random_decomposition(rng, 5)
        assert linking.distance_d(dec, dec) == 0.0
        assert linking.similarity_s(dec, dec) == pytest.approx(1.0, abs=1e-12)

    def test_swapped_pairs_distance(self):
        star = decomposition([2.0, 1.0], np.eye(2))
        hat = decomposition([2.0, 1.0], [[0.0, 1.0], [1.0, 0.0]])
        assert linking.distance_d(star, hat) == pytest.approx(1.0)

    def test_rotated_basis_similarity(self):
        star = decomposition([1.0, 1.0], np.eye(2))
        hat = decomposition([1.0, 1.0], np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2))
        assert linking.similarity_s(star, hat) == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    def test_similarity_ignores_phases(self, rng):
        star, hat = random_decomposition(rng, 4), random_decomposition(rng, 4)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        rotated = decomposition(hat.eigenvalues, hat.eigenvectors * phases)
        assert abs(linking.similarity_s(star, hat) - linking.similarity_s(star, rotated)) < 1e-12

    def test_permutation_invariance(self, rng):
        star, hat = random_decomposition(rng, 4), random_decomposition(rng, 4)
        order = [2, 0, 3, 1]
        shuffled = decomposition(hat.eigenvalues[order], hat.eigenvectors[:, order])
        assert linking.distance_d(star, shuffled) == pytest.approx(linking.distance_d(star, hat), abs=1e-14)
        assert linking.similarity_s(star, shuffled) == pytest.approx(linking.similarity_s(star, hat), abs=1e-14)

    def test_lipschitz_in_eigenvalues(self, rng):
        star, hat = random_decomposition(rng, 5), random_decomposition(rng, 5)
        eps = 1e-3
        scaled = decomposition(hat.eigenvalues * (1 + eps), hat.eigenvectors)
        change = abs(linking.distance_d(star, scaled) - linking.distance_d(star, hat))
        assert change <= eps * np.max(np.abs(hat.eigenvalues)) + 1e-14

    @pytest.mark.parametrize("size", [1, 2, 3])
    def test_brute_force_oracle(self, rng, size):
        for _ in range(5):
            star, hat = random_decomposition(rng, size), random_decomposition(rng, size)
            d, s = brute_force_scores(star, hat)
            assert linking.distance_d(star, hat) == pytest.approx(d, abs=1e-12)
            assert linking.similarity_s(star, hat) == pytest.approx(s, abs=1e-12)

    def test_bounds(self, rng):
        for _ in range(10):
            score = linking.link_score(random_decomposition(rng, 3), random_decomposition(rng, 3))
            assert score.d >= 0.0
            assert 0.0 <= score.s <= 1.0

    def test_zero_eigenvalue_is_skipped(self):
        star = decomposition([0.0, 1.0], np.eye(2))
        hat = decomposition([1.0, 1.0], [[0.0, 1.0], [1.0, 0.0]])
        score = linking.link_score(star, hat)
        assert score.s == pytest.approx(0.5)
        assert score.s_matches == [-1, 0]
        assert score.d_matches[1] == 0

    def test_dimension_mismatch(self, rng):
        with pytest.raises(BasisMismatchError):
            linking.distance_d(random_decomposition(rng, 2), random_decomposition(rng, 3))
        with pytest.raises(BasisMismatchError):
            linking.similarity_s(random_decomposition(rng, 2), random_decomposition(rng, 3))

    def test_frobenius(self):
        assert linking.frobenius_discrepancy(koopman(np.eye(2)), koopman(np.zeros((2, 2)))) == pytest.approx(
            np.sqrt(2)
        )
        with pytest.raises(BasisMismatchError):
            linking.frobenius_discrepancy(koopman(np.eye(2)), koopman(np.eye(4)))


class TestIdentify:
    def test_single_candidate_wins(self, rng):
        star = koopman(rng.standard_normal((4, 4)), label="only")
        hat = koopman(rng.standard_normal((4, 4)), provenance="data_driven")
        result = linking.identify(hat, [(dummy_spec("only"), star)])
        assert result.winner == "only"
        assert result.rankings_agree

    def test_exact_match_wins_every_ranking(self, rng):
        candidates = [(dummy_spec(name), koopman(rng.standard_normal((6, 6)), label=name)) for name in "abc"]
        hat = koopman(candidates[1][1].entries, provenance="data_driven")
        result = linking.identify(hat, candidates)
        assert result.winner == "b"
        assert result.ranking_d[0] == result.ranking_frobenius[0] == "b"
        assert result.rankings_agree
        verdict = next(v for v in result.verdicts if v.name == "b")
        assert verdict.d == 0.0
        assert verdict.s == pytest.approx(1.0, abs=1e-12)
        assert verdict.frobenius == 0.0

    def test_precomputed_decompositions(self, rng):
        star = koopman(rng.standard_normal((4, 4)), label="x")
        hat = koopman(rng.standard_normal((4, 4)), provenance="data_driven")
        direct = linking.identify(hat, [(dummy_spec("x"), star)])
        cached = linking.identify(hat, [(dummy_spec("x"), star)], decompose(hat), {"x": decompose(star)})
        assert cached.verdicts[0].d == direct.verdicts[0].d
        assert cached.verdicts[0].s == direct.verdicts[0].s

    def test_empty_candidates(self, rng):
        with pytest.raises(InputDataError):
            linking.identify(koopman(np.eye(2)), [])

    def test_builtin_exact_match(self, basis_4x4):
        library = operators.builtin_library()
        candidates = [(spec, operators.derive_koopman(spec, basis_4x4, 0.002)) for spec in library]
        hat = candidates[2][1].model_copy(update={"provenance": "data_driven"})
        result = linking.identify(hat, candidates)
        assert result.ranking_d[0] == operators.DIFFUSION
        assert result.ranking_frobenius[0] == operators.DIFFUSION

    def test_separation_resolves_defective_builtins(self, basis_4x4, rng):
        library = operators.builtin_library()
        candidates = [(spec, operators.derive_koopman(spec, basis_4x4, 0.002)) for spec in library]
        star = candidates[0][1]
        hat = star.model_copy(
            update={"entries": star.entries + 1e-10 * rng.standard_normal((16, 16)), "provenance": "data_driven"}
        )
        result = linking.identify(hat, candidates, separation=1.0)
        assert result.winner == operators.ADVECTION_X
        assert result.rankings_agree
        assert result.verdicts[0].s > 1 - 1e-9


class TestConfusionExperiment:
    def test_shape_and_orientation(self, small_config):
        result = linking.confusion_experiment(small_config)
        assert result.distance.candidate_names == list(operators.BUILTIN_NAMES)
        assert result.similarity.true_names == list(operators.BUILTIN_NAMES)
        assert result.frobenius.values.shape == (4, 4)
        assert len(result.details) == 4 * 4 * 2
        assert all(cell.data_rank == 16 for cell in result.details)
        assert np.all((result.similarity.values >= 0) & (result.similarity.values <= 1))
        assert all(result.frobenius.diagonal_dominance().values())

    def test_similarity_is_diagonally_dominant(self, small_config):
        result = linking.confusion_experiment(small_config)
        assert all(result.similarity.diagonal_dominance().values())
        for true in result.similarity.true_names:
            assert result.identification[true].winner == true

    def test_cells_are_seed_means(self, small_config):
        result = linking.confusion_experiment(small_config)
        cells = [c.s for c in result.details if c.true_name == "diffusion" and c.candidate_name == "advection-x"]
        assert result.similarity.value("advection-x", "diffusion") == pytest.approx(np.mean(cells))

    def test_deterministic_and_worker_independent(self, small_config):
        first = linking.confusion_experiment(small_config)
        parallel = linking.confusion_experiment(small_config.model_copy(update={"workers": 3}))
        np.testing.assert_array_equal(first.distance.values, parallel.distance.values)
        np.testing.assert_array_equal(first.similarity.values, parallel.similarity.values)
        assert [c.seed for c in first.details] == [c.seed for c in parallel.details]

    def test_single_candidate_matches_identify(self, small_config):
        spec = operators.library_by_name(operators.builtin_library(), operators.ADVECTION_Y)
        config = small_config.model_copy(
            update={
                "candidates": [spec],
                "initial_condition": InitialConditionConfig(seeds=[4], ensemble_size=16),
            }
        )
        result = linking.confusion_experiment(config)
        assert result.distance.values.shape == (1, 1)

        ics = ensemble(config.initial_condition.for_seed(4), 16)
        trajectories = simulate_many(spec, ics, config.basis, config.dt, config.horizon)
        hat = estimate(build_pairs(trajectories), config.dt)
        star = operators.derive_koopman(spec, config.basis, config.dt)
        verdict = linking.identify(hat, [(spec, star)], separation=config.spectral_separation).verdicts[0]
        assert result.distance.values[0, 0] == pytest.approx(verdict.d, abs=1e-12)
        assert result.similarity.values[0, 0] == pytest.approx(verdict.s, abs=1e-12)
        assert result.identification[spec.name].winner == spec.name

    def test_progress_callback(self, small_config):
        calls = []
        linking.confusion_experiment(small_config, lambda done, total, label: calls.append((done, total)))
        assert calls == [(i, 8) for i in range(1, 9)]

    def test_failure_names_the_triple(self, small_config, monkeypatch):
        def broken(*args, **kwargs):
            raise DegenerateDataError("no data")

        monkeypatch.setattr(linking, "estimate", broken)
        with pytest.raises(PipelineError) as info:
            linking.confusion_experiment(small_config)
        assert info.value.true_name == operators.ADVECTION_X
        assert info.value.seed == 1
        assert info.value.exit_code == 3

    @pytest.mark.slow
    def test_paper_preset(self):
        result = linking.confusion_experiment(load_preset("paper"))
        assert result.similarity.values.shape == (4, 4)
        assert all(cell.data_rank == 64 for cell in result.details)
        assert all(result.frobenius.diagonal_dominance().values())
        assert all(result.similarity.diagonal_dominance().values())
        assert np.all((result.similarity.values >= 0) & (result.similarity.values <= 1))


class TestConfusionMatrixReport:
    def test_frame_and_dominance(self, small_config):
        result = linking.confusion_experiment(small_config)
        frame = result.similarity.to_frame()
        assert frame.index.name == "candidate\\true"
        assert list(frame.columns) == list(operators.BUILTIN_NAMES)
        for true in result.similarity.true_names:
            column = frame[true]
            assert result.similarity.best_candidate(true) == column.idxmax()
            assert result.distance.best_candidate(true) == result.distance.to_frame()[true].idxmin()

    def test_markdown(self, small_config):
        text = linking.confusion_experiment(small_config).to_markdown()
        assert text.startswith("# Numerical Spectrum Linking")
        assert "Diagonal dominance" in text
        assert "**" in text
        assert "| Adv-Diff |" in text
