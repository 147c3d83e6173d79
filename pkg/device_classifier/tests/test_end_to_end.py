"""
Whole-pipeline runs on the bundled synthetic scenarios.

These take minutes; run them with ``pytest -m slow``.
"""

import numpy as np
import pytest

from device_classifier.baselines import make_classifier
from device_classifier.cascade import CascadeConfig
from device_classifier.evaluation import StreamCorpus, load_split, run_experiment, sweep
from device_classifier.features import FeaturizeParams
from device_classifier.serialization import load_model, save_model
from device_classifier.synth import bundled_scenario, generate_scenario, load_scenario

BASELINES = ('knn', 'tree', 'lstm', 'cnn')


def scenario_corpus(name, days=None, seed=0):
    scenario = load_scenario(bundled_scenario(f'{name}.scenario'))
    capture, _ = generate_scenario(scenario, duration_days=days, seed=seed)
    return StreamCorpus.from_capture(capture, scenario.device_entries()), load_split(bundled_scenario(f'{name}.split'))


@pytest.fixture(scope='module')
def default_corpus():
    """The full 19-day four-category scenario."""
    return scenario_corpus('default')


@pytest.fixture(scope='module')
def default_windows(default_corpus):
    corpus, split = default_corpus
    samples = corpus.featurize(FeaturizeParams())
    train = [s for s in samples if s.device_mac in set(split.train)]
    test = [s for s in samples if s.device_mac in set(split.test)]
    return train, test


@pytest.fixture(scope='module')
def cascade_result(default_corpus):
    corpus, split = default_corpus
    return run_experiment(corpus, split, 'cascade', CascadeConfig(), repeats=5, params=FeaturizeParams())


@pytest.mark.slow
class TestSyntheticScenarios:
    """The default pipeline separates the bundled categories."""

    def test_binary_scenario_knn(self):
        corpus, split = scenario_corpus('binary', days=2)

        result = run_experiment(corpus, split, 'knn', repeats=2, params=FeaturizeParams())

        assert result.mean_accuracy >= 0.9
        assert result.leaked_samples == 0

    def test_default_scenario_tree(self):
        corpus, split = scenario_corpus('default', days=3)

        result = run_experiment(corpus, split, 'tree', repeats=1, params=FeaturizeParams())

        assert result.mean_accuracy >= 0.9

    def test_default_scenario_cascade(self):
        corpus, split = scenario_corpus('default', days=4)
        config = CascadeConfig(epochs=40)

        result = run_experiment(corpus, split, 'cascade', config, repeats=5, params=FeaturizeParams())

        assert result.mean_accuracy >= 0.9
        assert len(result.reports) == 5


@pytest.mark.slow
class TestFourCategoryExperiment:
    """Five seeded repeats on the 19-day scenario with the default hyperparameters."""

    def test_cascade_accuracy(self, cascade_result):
        assert len(cascade_result.reports) == 5
        assert cascade_result.mean_accuracy >= 0.9

    def test_no_test_device_reaches_any_fit(self, cascade_result):
        assert cascade_result.leaked_samples == 0
        assert all(report.audit.clean for report in cascade_result.reports)

    @pytest.mark.parametrize('baseline', BASELINES)
    def test_cascade_matches_or_beats_baseline(self, default_corpus, cascade_result, baseline):
        corpus, split = default_corpus

        result = run_experiment(corpus, split, baseline, CascadeConfig(), repeats=5, params=FeaturizeParams())

        assert cascade_result.mean_accuracy >= result.mean_accuracy

    def test_identical_seeds_give_identical_reports(self, default_corpus, cascade_result):
        corpus, split = default_corpus

        again = run_experiment(corpus, split, 'cascade', CascadeConfig(), repeats=5, params=FeaturizeParams())

        for first, second in zip(cascade_result.reports, again.reports):
            assert first.to_rows() == second.to_rows()
            assert first.to_text() == second.to_text()

    def test_identical_seeds_give_identical_model_files(self, default_windows, tmp_path):
        train, _ = default_windows
        paths = []
        for run in ('first', 'second'):
            classifier = make_classifier('cascade', CascadeConfig(seed=3)).fit(train)
            paths.append(save_model(classifier.model, tmp_path / f'{run}.model'))

        assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.slow
class TestSavedModelsPredictLikeTrainedOnes:
    """Save, load and predict on 1000 held-out windows."""

    @pytest.mark.parametrize('algo', ['knn', 'tree', 'cascade', 'lstm', 'cnn'])
    def test_round_trip(self, default_windows, algo, tmp_path):
        train, test = default_windows
        rng = np.random.default_rng(11)
        queries = [test[i] for i in rng.choice(len(test), size=1000, replace=False)]
        classifier = make_classifier(algo, CascadeConfig(epochs=3)).fit(train)

        loaded = load_model(save_model(classifier.model, tmp_path / f'{algo}.model'))

        np.testing.assert_array_equal(loaded.predict(queries), classifier.predict(queries))


@pytest.mark.slow
class TestSweepTrends:
    """Accuracy trends across segmentation intervals, windows and training ratios."""

    def test_shortest_interval_is_least_accurate(self, default_corpus):
        corpus, split = default_corpus

        result = sweep('interval', [60, 300, 600], corpus, split, 'cascade', repeats=2)

        accuracies = [row[1] for row in result.rows]
        assert accuracies[0] == min(accuracies)

    def test_window_sizes_plateau(self, default_corpus):
        corpus, split = default_corpus

        result = sweep('window', [8, 10, 12], corpus, split, 'cascade', repeats=2)

        accuracies = [row[1] for row in result.rows]
        assert max(accuracies) - min(accuracies) < 0.05

    def test_binary_accuracy_grows_with_training_ratio(self):
        corpus, split = scenario_corpus('binary')

        result = sweep('ratio', [0.25, 0.5, 0.75], corpus, split, 'cascade', repeats=2)

        accuracies = [row[1] for row in result.rows]
        assert all(a <= b for a, b in zip(accuracies, accuracies[1:]))
