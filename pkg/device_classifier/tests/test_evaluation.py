"""
Tests for held-out-device evaluation: splits, reports, repeated runs and sweeps.
"""

import numpy as np
import pytest

from device_classifier.baselines import knn_fit, knn_predict, make_classifier
from device_classifier.cascade import CascadeConfig, Classifier
from device_classifier.exceptions import ConfigurationError, DataError, ParameterError, SplitValidationError
from device_classifier.evaluation import (
    EvalReport,
    ExperimentResult,
    LeakageAudit,
    SplitSpec,
    StreamCorpus,
    classify_devices,
    eligible_devices,
    load_split,
    majority_label,
    restrict_categories,
    run_experiment,
    run_repeat,
    sweep,
    write_split,
)
from device_classifier.features import featurize_streams, observe_fits
from device_classifier.synth import bundled_scenario

from .sample_data import DEVICE_A, DEVICE_B, SMALL_PARAMS


class ConstantClassifier(Classifier):
    """Predicts one category for every window."""

    name = 'constant'

    def __init__(self, label):
        self.label = label
        self._model = None

    @property
    def model(self):
        return self._model

    def fit(self, samples):
        self._model = self.label
        return self

    def predict(self, samples):
        return np.full(len(samples), self._require_model(), dtype=np.int64)


class OracleClassifier(Classifier):
    """Reads the true label off each window, recording what it was trained on."""

    name = 'oracle'

    def __init__(self):
        self._model = None
        self.seen = []

    @property
    def model(self):
        return self._model

    def fit(self, samples):
        self.seen = list(samples)
        self._model = True
        return self

    def predict(self, samples):
        return np.array([s.label for s in samples], dtype=np.int64)


class HiddenWindowsClassifier(Classifier):
    """Fits kNN on windows given at construction as well as the ones passed to fit."""

    name = 'hidden-windows'

    def __init__(self, hidden):
        self.hidden = list(hidden)
        self._model = None

    @property
    def model(self):
        return self._model

    def fit(self, samples):
        self._model = knn_fit(list(samples) + self.hidden, k=1)
        return self

    def predict(self, samples):
        return knn_predict(self._require_model(), samples)


class TestSplitSpec:
    """Tests for held-out-device splits."""

    def test_macs_are_normalized(self):
        split = SplitSpec(('02-00-00-00-00-01',), ('02:00:00:00:00:02',))
        assert split.train == ('02:00:00:00:00:01',)

    def test_device_on_both_sides(self):
        with pytest.raises(SplitValidationError):
            SplitSpec(('02:00:00:00:00:01',), ('02:00:00:00:00:01'.upper(),))

    def test_empty_side(self):
        with pytest.raises(SplitValidationError):
            SplitSpec((), ('02:00:00:00:00:01',))

    def test_validate_unknown_device(self, category_split):
        with pytest.raises(SplitValidationError):
            category_split.validate({mac: 1 for mac in category_split.train})

    def test_validate_untrained_category(self):
        split = SplitSpec(('02:00:00:00:00:01',), ('02:00:00:00:00:02',))
        with pytest.raises(SplitValidationError):
            split.validate({'02:00:00:00:00:01': 1, '02:00:00:00:00:02': 2})

    def test_file_round_trip(self, category_split, tmp_path):
        path = write_split(category_split, tmp_path / 'split.txt')
        assert load_split(path) == category_split

    def test_bundled_split(self):
        split = load_split(bundled_scenario('default.split'))
        assert len(split.train) == 8
        assert len(split.test) == 7

    def test_unknown_section(self, tmp_path):
        path = tmp_path / 'split.txt'
        path.write_text('[train]\n02:00:00:00:00:01\n[holdout]\n02:00:00:00:00:02\n')
        with pytest.raises(ConfigurationError):
            load_split(path)


class TestEvalReport:
    """Tests for accuracy, confusion and per-class scores."""

    def test_from_predictions(self):
        report = EvalReport.from_predictions(
            [1, 1, 2, 2, 3], [1, 2, 2, 2, 1], ['a'] * 2 + ['b'] * 2 + ['c'], category_ids=[1, 2, 3]
        )

        assert report.accuracy == pytest.approx(0.6)
        assert report.confusion.tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 0]]
        assert report.precision == {1: 0.5, 2: pytest.approx(2 / 3), 3: 0.0}
        assert report.recall == {1: 0.5, 2: 1.0, 3: 0.0}
        assert report.support == {1: 2, 2: 2, 3: 1}
        assert report.device_votes == {'a': (1, 1, 2), 'b': (2, 2, 2), 'c': (3, 1, 1)}

    def test_default_categories_span_all_labels(self):
        report = EvalReport.from_predictions([1, 3], [3, 3])
        assert report.category_ids == (1, 2, 3)

    def test_label_outside_categories(self):
        with pytest.raises(DataError):
            EvalReport.from_predictions([1, 4], [1, 1], category_ids=[1, 2])

    def test_nothing_to_score(self):
        with pytest.raises(DataError):
            EvalReport.from_predictions([], [])

    def test_written_report(self, tmp_path):
        report = EvalReport.from_predictions(
            [1, 2], [1, 1], ['a', 'b'], category_names={1: 'Hubs', 2: 'Cameras'}, metadata={'seed': '0'}
        )

        text_path, csv_path = report.write(tmp_path, 'run')

        text = text_path.read_text()
        assert 'accuracy: 0.5000' in text
        assert 'Cameras' in text
        assert 'WRONG' in text
        assert csv_path.read_text().splitlines()[0] == 'section,true,predicted,value'

    def test_majority_label_ties(self):
        assert majority_label([3, 2, 2, 3]) == 2
        assert majority_label([4]) == 4


class TestRunRepeat:
    """Tests for a single seeded fit and score."""

    def test_constant_prediction(self, category_dataset, category_split):
        report = run_repeat(category_dataset, category_split, lambda seed: ConstantClassifier(3), seed=0)

        assert report.accuracy == pytest.approx(0.25)
        assert report.category_ids == (1, 2, 3, 4)
        assert report.confusion[:, 2].tolist() == [5, 5, 5, 5]
        assert report.confusion.sum() == 20

    def test_true_labels_give_diagonal(self, category_dataset, category_split):
        report = run_repeat(category_dataset, category_split, lambda seed: OracleClassifier(), seed=0)

        assert report.accuracy == 1.0
        np.testing.assert_array_equal(report.confusion, np.diag([5, 5, 5, 5]))

    def test_only_train_devices_reach_fit(self, category_dataset, category_split):
        oracle = OracleClassifier()

        report = run_repeat(category_dataset, category_split, lambda seed: oracle, seed=0)

        assert {s.device_mac for s in oracle.seen} == set(category_split.train)
        assert report.audit.leaked_samples == 0
        assert report.audit.clean

    def test_test_windows_used_inside_fit_fail_the_repeat(self, category_dataset, category_split):
        hidden = [s for s in category_dataset if s.device_mac in set(category_split.test)]

        with pytest.raises(SplitValidationError, match='20 test-device samples reached training'):
            run_repeat(category_dataset, category_split, lambda seed: HiddenWindowsClassifier(hidden), seed=0)

    def test_train_fraction(self, category_dataset, category_split):
        oracle = OracleClassifier()

        report = run_repeat(category_dataset, category_split, lambda seed: oracle, seed=0, train_fraction=0.5)

        assert len(oracle.seen) == 10
        assert report.metadata['train_ratio'] == '0.5'

    def test_invalid_train_fraction(self, category_dataset, category_split):
        with pytest.raises(ParameterError):
            run_repeat(category_dataset, category_split, lambda seed: OracleClassifier(), train_fraction=0.0)

    def test_split_without_windows(self, category_dataset):
        split = SplitSpec(('02:00:00:00:01:01',), ('02:00:00:00:09:09',))
        with pytest.raises(DataError):
            run_repeat(category_dataset, split, lambda seed: OracleClassifier())

    def test_knn_separates_categories(self, category_dataset, category_split):
        report = run_repeat(category_dataset, category_split, 'knn', options={'k': 1}, seed=0)

        assert report.accuracy == 1.0
        assert report.metadata['algorithm'] == 'knn'
        assert set(report.device_votes) == set(category_split.test)


class TestLeakageAudit:
    """Tests for the record of what fitting consumed."""

    def test_counts_test_device_samples(self, category_dataset):
        audit = LeakageAudit(frozenset({'02:00:00:00:01:02'}))

        audit.record('classifier', category_dataset[:10])

        assert audit.leaked_samples == 5
        assert not audit.clean
        assert 'test-device samples in fit: 5' in audit.summary()

    @pytest.mark.parametrize('algo', ['knn', 'tree', 'lstm'])
    def test_fit_stages_see_only_training_devices(self, category_dataset, category_split, algo):
        train = [s for s in category_dataset if s.device_mac in set(category_split.train)]
        audit = LeakageAudit(frozenset(category_split.test))

        audit.fit(make_classifier(algo, CascadeConfig(lstm_hidden=4, epochs=1), k=1), train)

        stages = ['classifier', 'training'] + ([] if algo == 'tree' else ['normalization'])
        assert sorted(audit.fit_samples) == sorted(stages)
        for stage in stages:
            assert audit.stage_devices(stage) == frozenset(category_split.train)
            assert sum(audit.fit_samples[stage].values()) == 20
        assert audit.clean

    def test_windows_hidden_inside_fit_are_counted(self, category_dataset, category_split):
        hidden = [s for s in category_dataset if s.device_mac in set(category_split.test)]
        train = [s for s in category_dataset if s.device_mac in set(category_split.train)]
        audit = LeakageAudit(frozenset(category_split.test))

        audit.fit(HiddenWindowsClassifier(hidden), train)

        assert audit.stage_devices('classifier') == frozenset(category_split.train)
        assert audit.stage_devices('normalization') == frozenset(category_split.train + category_split.test)
        assert audit.leaked_samples == 20
        assert not audit.clean

    def test_fits_outside_the_audit_are_not_recorded(self, category_dataset):
        audit = LeakageAudit(frozenset({'02:00:00:00:01:02'}))
        with observe_fits(audit.record):
            pass

        knn_fit(category_dataset, k=1)

        assert audit.fit_samples == {}


class TestRunExperiment:
    """Tests for repeated runs."""

    def test_seeds_and_statistics(self, category_dataset, category_split):
        result = run_experiment(
            category_dataset, category_split, lambda seed: ConstantClassifier(1 + seed % 2), repeats=4, base_seed=10
        )

        assert [r.metadata['seed'] for r in result.reports] == ['10', '11', '12', '13']
        assert result.accuracies == [0.25] * 4
        assert result.mean_accuracy == pytest.approx(0.25)
        assert result.std_accuracy == pytest.approx(0.0)
        assert result.leaked_samples == 0

    def test_population_standard_deviation(self):
        reports = [EvalReport.from_predictions([1, 2], predicted) for predicted in ([1, 2], [1, 1])]
        result = ExperimentResult(reports)
        assert result.mean_accuracy == pytest.approx(0.75)
        assert result.std_accuracy == pytest.approx(0.25)
        assert result.best_accuracy == 1.0

    def test_deterministic_for_a_seed(self, category_dataset, category_split):
        first = run_experiment(category_dataset, category_split, 'tree', repeats=2, base_seed=3)
        second = run_experiment(category_dataset, category_split, 'tree', repeats=2, base_seed=3)
        assert first.accuracies == second.accuracies

    def test_invalid_repeats(self, category_dataset, category_split):
        with pytest.raises(ParameterError):
            run_experiment(category_dataset, category_split, 'knn', repeats=0)

    def test_split_must_cover_test_categories(self, category_dataset):
        split = SplitSpec(('02:00:00:00:01:01',), ('02:00:00:00:02:02',))
        with pytest.raises(SplitValidationError):
            run_experiment(category_dataset, split, 'knn')

    def test_written_results(self, category_dataset, category_split, tmp_path):
        result = run_experiment(category_dataset, category_split, 'knn', repeats=2, options={'k': 1})

        summary = result.write(tmp_path)

        assert summary.name == 'summary.csv'
        assert (tmp_path / 'report-seed0.txt').exists()
        assert (tmp_path / 'report-seed1.csv').exists()
        assert 'mean accuracy 1.0000' in (tmp_path / 'summary.txt').read_text()


class TestCorpus:
    """Tests for stream corpora, eligibility and category restriction."""

    @pytest.fixture
    def corpus(self, streams):
        return StreamCorpus(streams, {DEVICE_A: 1, DEVICE_B: 2})

    def test_featurize(self, corpus):
        samples = corpus.featurize(SMALL_PARAMS)
        assert len(samples) == 26

    def test_eligibility_drops_single_device_categories(self, corpus):
        eligible = eligible_devices(corpus, interval_secs=60.0, min_active_fraction=0.0)
        assert eligible.streams == {}

    def test_eligibility_drops_quiet_devices(self, streams):
        corpus = StreamCorpus(streams, {DEVICE_A: 1, DEVICE_B: 1})

        eligible = eligible_devices(corpus, interval_secs=60.0, min_active_fraction=0.45)

        assert set(eligible.streams) == set()
        eligible = eligible_devices(corpus, interval_secs=60.0, min_active_fraction=0.4)
        assert set(eligible.streams) == {DEVICE_A, DEVICE_B}

    def test_restrict_samples(self, category_dataset):
        samples, mapping = restrict_categories(category_dataset, [4, 2])

        assert mapping == {4: 1, 2: 2}
        assert len(samples) == 20
        assert {s.label for s in samples} == {1, 2}
        assert all(s.device_mac.startswith('02:00:00:00:04') for s in samples if s.label == 1)

    def test_restrict_needs_two_categories(self, category_dataset):
        with pytest.raises(ParameterError):
            restrict_categories(category_dataset, [1])

    def test_classify_devices(self, streams):
        samples = featurize_streams(streams, {DEVICE_A: 1, DEVICE_B: 2}, SMALL_PARAMS)
        classifier = make_classifier('knn', k=1).fit(samples)

        verdicts = classify_devices(classifier.model, streams, SMALL_PARAMS)

        assert verdicts[DEVICE_A].predicted == 1
        assert verdicts[DEVICE_B].predicted == 2
        assert verdicts[DEVICE_A].window_count == 11
        assert verdicts[DEVICE_B].window_count == 15
        assert sum(verdicts[DEVICE_B].votes.values()) == 15


class TestSweep:
    """Tests for parameter sweeps."""

    def test_ratio_sweep_on_dataset(self, category_dataset, category_split, tmp_path):
        result = sweep('train_ratio', [0.5, 1.0], category_dataset, category_split, 'knn',
                       repeats=2, options={'k': 1})

        frame = result.to_frame()
        assert list(frame.columns) == ['ratio', 'mean_accuracy', 'std_accuracy', 'best_accuracy']
        assert frame['ratio'].tolist() == [0.5, 1.0]
        assert result.write(tmp_path / 'sweep.csv').exists()

    def test_interval_sweep_needs_streams(self, category_dataset, category_split):
        with pytest.raises(ParameterError):
            sweep('interval', [60.0], category_dataset, category_split, 'knn')

    def test_unknown_parameter(self, category_dataset, category_split):
        with pytest.raises(ParameterError):
            sweep('learning_rate', [0.1], category_dataset, category_split, 'knn')

    def test_window_sweep_on_streams(self, streams):
        corpus = StreamCorpus(streams, {DEVICE_A: 1, DEVICE_B: 1})
        split = SplitSpec((DEVICE_A,), (DEVICE_B,))

        result = sweep('window', [2, 3], corpus, split, 'knn', repeats=1,
                       params=SMALL_PARAMS, options={'k': 1})

        assert [row[0] for row in result.rows] == [2.0, 3.0]
        assert all(row[1] == 1.0 for row in result.rows)

    def test_window_sweep_overlaps_half_the_window(self, streams):
        corpus = StreamCorpus(streams, {DEVICE_A: 1, DEVICE_B: 1})
        split = SplitSpec((DEVICE_A,), (DEVICE_B,))
        params = SMALL_PARAMS.with_changes(overlap=0)

        result = sweep('window', [2, 3, 4], corpus, split, 'knn', repeats=1, params=params, options={'k': 1})

        overlaps = [experiment.reports[0].metadata['overlap'] for experiment in result.experiments]
        assert overlaps == ['1', '1', '2']
