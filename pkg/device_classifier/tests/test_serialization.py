"""
Tests for model files.
"""

import numpy as np
import pytest

from device_classifier.baselines import knn_fit, tree_fit
from device_classifier.cascade import CascadeConfig, train
from device_classifier.exceptions import ModelFormatError
from device_classifier.serialization import load_model, model_summary, save_model


@pytest.fixture
def training_set(sample_factory):
    rng = np.random.default_rng(13)
    return [
        sample_factory(label + rng.normal(scale=0.3, size=(4, 3)), label=label, schema=('a', 'b', 'c'))
        for label in (1, 2, 3)
        for _ in range(6)
    ]


@pytest.fixture
def network_config():
    return CascadeConfig(
        num_features=3, window=4, lstm_hidden=3, conv_filters=2, num_classes=3,
        epochs=3, batch_size=4, keep_prob=0.5,
    )


class TestSaveAndLoad:
    """Saved models predict exactly like the originals."""

    @pytest.mark.parametrize('architecture', ['cascade', 'lstm', 'cnn'])
    def test_neural_models(self, training_set, network_config, architecture, tmp_path):
        model = train(training_set, network_config.with_changes(architecture=architecture)).model

        loaded = load_model(save_model(model, tmp_path / f'{architecture}.model'))

        assert loaded.config == model.config
        assert loaded.schema == ('a', 'b', 'c')
        np.testing.assert_array_equal(loaded.scaler.minimum, model.scaler.minimum)
        for name, value in model.parameters.items():
            np.testing.assert_array_equal(loaded.parameters[name], value)
        np.testing.assert_array_equal(loaded.predict_proba(training_set), model.predict_proba(training_set))
        assert loaded.metadata.epochs_run == 3
        assert loaded.metadata.final_loss == model.metadata.final_loss

    def test_knn(self, training_set, tmp_path):
        model = knn_fit(training_set, k=3)

        loaded = load_model(save_model(model, tmp_path / 'knn.model'))

        assert loaded.k == 3
        assert loaded.window == 4
        np.testing.assert_array_equal(loaded.predict(training_set), model.predict(training_set))

    def test_tree(self, training_set, tmp_path):
        model = tree_fit(training_set, max_depth=4)

        loaded = load_model(save_model(model, tmp_path / 'nested' / 'tree.model'))

        assert loaded.max_depth == 4
        assert loaded.node_count == model.node_count
        np.testing.assert_array_equal(loaded.predict(training_set), model.predict(training_set))

    def test_file_header(self, training_set, tmp_path):
        path = save_model(knn_fit(training_set, k=2), tmp_path / 'knn.model')

        first_line = path.read_text().splitlines()[0]

        assert first_line.startswith('flowclass-model version=1 algo=knn')
        assert 'k=2' in first_line.split()


class TestBadFiles:
    """Malformed model files raise ModelFormatError."""

    def test_foreign_file(self, tmp_path):
        path = tmp_path / 'notes.txt'
        path.write_text('hello\n')
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_unsupported_version(self, training_set, tmp_path):
        path = save_model(knn_fit(training_set, k=2), tmp_path / 'knn.model')
        path.write_text(path.read_text().replace('version=1', 'version=7', 1))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_unknown_algorithm(self, training_set, tmp_path):
        path = save_model(knn_fit(training_set, k=2), tmp_path / 'knn.model')
        path.write_text(path.read_text().replace('algo=knn', 'algo=svm', 1))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_truncated_parameter_block(self, training_set, tmp_path):
        path = save_model(tree_fit(training_set), tmp_path / 'tree.model')
        lines = path.read_text().splitlines()
        path.write_text('\n'.join(lines[:-1]) + '\n1 2\n')
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_missing_network_parameter(self, training_set, network_config, tmp_path):
        model = train(training_set, network_config.with_changes(epochs=1)).model
        path = save_model(model, tmp_path / 'cascade.model')
        lines = path.read_text().splitlines()
        index = lines.index(next(line for line in lines if line.startswith('param output.b ')))
        path.write_text('\n'.join(lines[:index] + lines[index + 2:]) + '\n')
        with pytest.raises(ModelFormatError):
            load_model(path)


class TestSummary:
    def test_summaries(self, training_set, tmp_path):
        assert model_summary(knn_fit(training_set, k=3))[0] == 'algorithm: knn'
        assert 'depth' in model_summary(tree_fit(training_set, max_depth=2))[-1]
