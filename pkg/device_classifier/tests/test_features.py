"""
Tests for segmentation, feature extraction, normalization and windowing.
"""

import numpy as np
import pytest
from scipy import stats

from device_classifier.exceptions import DataError, ParameterError, SchemaError
from device_classifier.features import (
    FULL_SCHEMA,
    DEFAULT_FEATURES,
    FeaturizeParams,
    FeatureVector,
    MinMaxScaler,
    activity_profile,
    extract_features,
    featurize_stream,
    featurize_streams,
    make_windows,
    normalize,
    read_dataset,
    resolve_feature_name,
    segment_stream,
    select_schema,
    shuffle_samples,
    window_starts,
    write_dataset,
)
from device_classifier.traffic_model import DeviceStream, PacketRecord

from .sample_data import DEVICE_A, DEVICE_B, GATEWAY, SMALL_PARAMS

USER_LENGTHS_A0 = [192, 600, 1514, 66, 620]
CONTROL_LENGTHS_A0 = [80, 96, 90]


class TestSchema:
    """Tests for the feature schema and name resolution."""

    def test_full_schema_layout(self):
        assert len(FULL_SCHEMA) == 52
        assert FULL_SCHEMA[:5] == (
            'total_packets', 'user_packets', 'control_packets', 'received_packets', 'transmitted_packets'
        )
        assert FULL_SCHEMA[5:12] == (
            'tcp_packets', 'udp_packets', 'http_packets', 'dns_packets',
            'arp_packets', 'ntp_packets', 'icmp_packets',
        )
        assert FULL_SCHEMA[-1] == 'transmitted_length_kurt'
        assert set(DEFAULT_FEATURES) <= set(FULL_SCHEMA)

    @pytest.mark.parametrize('name, expected', [
        ('user packet length peak', 'user_length_max'),
        ('Control Packet Average', 'control_length_mean'),
        ('user_length_peak', 'user_length_max'),
        ('received_length_average', 'received_length_mean'),
        ('all_length_kurtosis', 'all_length_kurt'),
        ('tcp_packets', 'tcp_packets'),
    ])
    def test_resolve_aliases(self, name, expected):
        assert resolve_feature_name(name) == expected

    def test_unknown_feature(self):
        with pytest.raises(SchemaError) as exc_info:
            resolve_feature_name('user_length_median')
        assert 'user_length_median' in str(exc_info.value)

    def test_feature_vector_rejects_non_finite_values(self):
        with pytest.raises(DataError):
            FeatureVector([1.0, float('inf')], ('a', 'b'))


class TestSegmentation:
    """Tests for fixed-interval segmentation of device streams."""

    def test_segments_of_device_a(self, streams):
        segments = segment_stream(streams[DEVICE_A], 300)

        assert [s.interval_index for s in segments] == [0, 1, 2]
        assert [len(s) for s in segments] == [8, 3, 2]

    def test_interval_boundary_belongs_to_the_later_segment(self, streams):
        segments = segment_stream(streams[DEVICE_B], 300)

        assert [len(s) for s in segments] == [4, 2, 1, 1]
        assert segments[1].records[0].timestamp == 300.0

    def test_empty_intervals_are_kept(self, streams):
        segments = segment_stream(streams[DEVICE_A], 60)

        assert len(segments) == 12
        assert [len(s) for s in segments] == [5, 1, 2, 0, 0, 2, 0, 0, 0, 1, 1, 1]

    def test_segments_partition_the_stream(self, streams):
        for stream in streams.values():
            segments = segment_stream(stream, 60)
            records = tuple(r for s in segments for r in s.records)
            assert records == stream.records

    def test_stream_starting_late(self):
        stream = DeviceStream.from_records(DEVICE_A, [
            PacketRecord(1000.0, 60, 'TCP', DEVICE_A, GATEWAY),
            PacketRecord(1700.0, 60, 'TCP', DEVICE_A, GATEWAY),
        ])
        segments = segment_stream(stream, 300)
        assert [s.interval_index for s in segments] == [3, 4, 5]

    def test_empty_stream(self):
        assert segment_stream(DeviceStream.from_records(DEVICE_A, []), 300) == []

    @pytest.mark.parametrize('interval', [0, -60, float('nan')])
    def test_invalid_interval(self, streams, interval):
        with pytest.raises(ParameterError):
            segment_stream(streams[DEVICE_A], interval)


class TestExtractFeatures:
    """Tests for the per-segment feature vector."""

    @pytest.fixture
    def first_segment(self, streams):
        return extract_features(segment_stream(streams[DEVICE_A], 300)[0])

    def test_population_counts(self, first_segment):
        assert first_segment['total_packets'] == 8
        assert first_segment['user_packets'] == 5
        assert first_segment['control_packets'] == 3
        assert first_segment['received_packets'] == 2
        assert first_segment['transmitted_packets'] == 6

    def test_protocol_counts(self, first_segment):
        assert first_segment['tcp_packets'] == 3
        assert first_segment['udp_packets'] == 2
        assert first_segment['dns_packets'] == 2
        assert first_segment['ntp_packets'] == 1
        assert first_segment['arp_packets'] == 0

    def test_user_length_statistics(self, first_segment):
        assert first_segment['user_length_max'] == 1514
        assert first_segment['user_length_min'] == 66
        assert first_segment['user_length_sum'] == 2992
        assert first_segment['user_length_mean'] == pytest.approx(598.4)

    def test_control_length_statistics(self, first_segment):
        assert first_segment['control_length_max'] == 96
        assert first_segment['control_length_mean'] == pytest.approx(266 / 3)

    def test_direction_length_statistics(self, first_segment):
        assert first_segment['received_length_mean'] == pytest.approx((96 + 1514) / 2)
        assert first_segment['transmitted_length_sum'] == 192 + 80 + 600 + 90 + 66 + 620

    def test_higher_moments_match_population_formulas(self, first_segment):
        lengths = np.array(USER_LENGTHS_A0, dtype=float)
        assert first_segment['user_length_var'] == pytest.approx(np.var(lengths), rel=1e-9)
        assert first_segment['user_length_std'] == pytest.approx(np.std(lengths), rel=1e-9)
        assert first_segment['user_length_skew'] == pytest.approx(stats.skew(lengths, bias=True), rel=1e-9)
        assert first_segment['user_length_kurt'] == pytest.approx(
            stats.kurtosis(lengths, fisher=False, bias=True), rel=1e-9
        )

    def test_empty_segment_is_all_zeros(self, streams):
        empty = segment_stream(streams[DEVICE_A], 60)[3]
        vector = extract_features(empty)
        assert len(vector) == len(FULL_SCHEMA)
        assert not vector.values.any()

    def test_single_packet_segment_has_zero_spread(self, streams):
        single = segment_stream(streams[DEVICE_A], 60)[1]
        vector = extract_features(single)
        assert vector['control_packets'] == 1
        assert vector['control_length_mean'] == 90
        assert vector['control_length_std'] == 0
        assert vector['control_length_skew'] == 0
        assert vector['control_length_kurt'] == 0

    def test_custom_control_protocols(self, streams):
        segment = segment_stream(streams[DEVICE_A], 300)[0]
        vector = extract_features(segment, control_protocols=frozenset({'TCP'}))
        assert vector['control_packets'] == 3
        assert vector['user_packets'] == 5

    def test_stream_featurization_matches_segment_extraction(self, streams):
        table = featurize_stream(streams[DEVICE_B], 60)
        segments = segment_stream(streams[DEVICE_B], 60)

        assert len(table) == len(segments)
        for row, segment in zip(table.vectors(), segments):
            np.testing.assert_allclose(row.values, extract_features(segment).values, rtol=1e-12)

    def test_select_schema_keeps_requested_order(self, first_segment):
        selected = select_schema(first_segment, ['control packet number', 'user_length_peak'])
        assert selected.schema == ('control_packets', 'user_length_max')
        assert list(selected.values) == [3, 1514]


class TestNormalization:
    """Tests for min-max scaling."""

    def test_scaler_maps_training_range_to_unit_interval(self):
        scaler = MinMaxScaler.fit(np.array([[0.0, 5.0], [10.0, 5.0], [4.0, 5.0]]))

        np.testing.assert_allclose(scaler.transform(np.array([[5.0, 5.0]])), [[0.5, 0.0]])

    def test_test_values_are_not_clamped(self):
        scaler = MinMaxScaler.fit(np.array([[0.0], [10.0]]))
        np.testing.assert_allclose(scaler.transform(np.array([[15.0], [-5.0]])), [[1.5], [-0.5]])

    def test_inverse_transform(self):
        values = np.array([[1.0, 2.0], [3.0, 8.0]])
        scaler = MinMaxScaler.fit(values)
        np.testing.assert_allclose(scaler.inverse_transform(scaler.transform(values)), values)

    def test_normalize_vectors(self):
        vectors = [FeatureVector([0.0, 1.0], ('a', 'b')), FeatureVector([4.0, 1.0], ('a', 'b'))]

        scaled, scaler = normalize(vectors)

        assert [list(v.values) for v in scaled] == [[0.0, 0.0], [1.0, 0.0]]
        assert scaler.schema == ('a', 'b')

    def test_normalize_empty(self):
        with pytest.raises(DataError):
            normalize([])


class TestWindows:
    """Tests for grouping feature vectors into windows."""

    @pytest.fixture
    def vectors(self):
        return [FeatureVector([float(k), float(10 * k)], ('a', 'b')) for k in range(10)]

    def test_overlapping_windows(self, vectors):
        windows = make_windows(vectors, 4, 2, label=3, device_mac=DEVICE_A)

        assert [w.start_index for w in windows] == [0, 2, 4, 6]
        assert list(windows[1].features[:, 0]) == [2.0, 3.0, 4.0, 5.0]
        assert all(w.label == 3 and w.schema == ('a', 'b') for w in windows)

    def test_trailing_remainder_is_dropped(self, vectors):
        windows = make_windows(vectors, 4, 0, label=1, device_mac=DEVICE_A)
        assert [w.start_index for w in windows] == [0, 4]

    @pytest.mark.parametrize('n, window, overlap', [(10, 4, 2), (10, 4, 0), (10, 6, 3), (6, 6, 3), (100, 6, 5)])
    def test_window_count(self, n, window, overlap):
        assert len(window_starts(n, window, overlap)) == (n - window) // (window - overlap) + 1

    def test_too_few_vectors(self, vectors):
        assert make_windows(vectors[:3], 4, 2, label=1, device_mac=DEVICE_A) == []

    @pytest.mark.parametrize('overlap', [4, 5, -1])
    def test_invalid_overlap(self, vectors, overlap):
        with pytest.raises(ParameterError):
            make_windows(vectors, 4, overlap, label=1, device_mac=DEVICE_A)

    def test_shuffle_is_seeded_and_keeps_rows(self, vectors):
        windows = make_windows(vectors, 2, 0, label=1, device_mac=DEVICE_A)

        first = shuffle_samples(windows, seed=5)
        second = shuffle_samples(windows, seed=5)

        assert [w.start_index for w in first] == [w.start_index for w in second]
        assert sorted(w.start_index for w in first) == [0, 2, 4, 6, 8]
        for window in first:
            assert window.features[1, 0] == window.features[0, 0] + 1


class TestFeaturizeStreams:
    """Tests for streams-to-dataset featurization."""

    def test_window_counts_and_order(self, streams):
        samples = featurize_streams(streams, {DEVICE_A: 1, DEVICE_B: 2}, SMALL_PARAMS)

        macs = [s.device_mac for s in samples]
        assert macs == [DEVICE_A] * 11 + [DEVICE_B] * 15
        assert [s.label for s in samples[:11]] == [1] * 11
        assert [s.start_index for s in samples[:11]] == list(range(11))
        assert samples[0].schema == DEFAULT_FEATURES
        assert samples[0].features.shape == (2, 6)

    def test_first_window_values(self, streams):
        samples = featurize_streams(streams, {DEVICE_A: 1}, FeaturizeParams(window=2, overlap=0))

        assert len(samples) == 1
        first = samples[0].features[0]
        assert list(first) == pytest.approx([5, 598.4, 1514, 3, 266 / 3, 96])

    def test_unlabelled_streams_are_skipped(self, streams):
        samples = featurize_streams(streams, {DEVICE_B: 2}, SMALL_PARAMS)
        assert {s.device_mac for s in samples} == {DEVICE_B}

    def test_invalid_params(self):
        with pytest.raises(ParameterError):
            FeaturizeParams(window=4, overlap=4)
        with pytest.raises(ParameterError):
            FeaturizeParams(interval_secs=0)
        with pytest.raises(SchemaError):
            FeaturizeParams(feature_names=('user_packets', 'jitter'))

    def test_activity_profile(self, streams):
        profile = activity_profile(streams[DEVICE_A], 60)

        assert profile.bins == 12
        assert profile.max_per_bin == 5
        assert profile.mean_per_bin == pytest.approx(13 / 12)
        assert profile.active_fraction == pytest.approx(7 / 12)


class TestDatasetFiles:
    """Tests for the windowed dataset file."""

    def test_write_and_read(self, streams, tmp_path):
        samples = featurize_streams(streams, {DEVICE_A: 1, DEVICE_B: 2}, SMALL_PARAMS)

        path = write_dataset(samples, tmp_path / 'data' / 'dataset.csv')
        loaded = read_dataset(path)

        assert len(loaded) == len(samples)
        for original, again in zip(samples, loaded):
            assert again.device_mac == original.device_mac
            assert again.label == original.label
            assert again.schema == original.schema
            np.testing.assert_array_equal(again.features, original.features)

    def test_header_encodes_window_and_schema(self, streams, tmp_path):
        samples = featurize_streams(streams, {DEVICE_A: 1}, SMALL_PARAMS)
        path = write_dataset(samples, tmp_path / 'dataset.csv')

        header = path.read_text().splitlines()[0].split(',')

        assert header[:4] == ['device_mac', 'label', '0:user_packets', '0:user_length_mean']
        assert header[-1] == '1:control_length_max'

    def test_malformed_header(self, tmp_path):
        path = tmp_path / 'dataset.csv'
        path.write_text('mac,label,0:a\n02:00:00:00:00:01,1,0.5\n')
        with pytest.raises(DataError):
            read_dataset(path)

    def test_write_empty_dataset(self, tmp_path):
        with pytest.raises(DataError):
            write_dataset([], tmp_path / 'dataset.csv')
