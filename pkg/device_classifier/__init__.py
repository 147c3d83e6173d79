"""
IoT device classification from network traffic.

The app provides:
- A numpy pipeline: capture parsing, per-device streams, segment features and
  windowed samples (traffic_model, ingest, features)
- An LSTM-CNN cascade trained from scratch plus kNN, tree, LSTM-only and
  CNN-only baselines (nn_core, cascade, baselines)
- A synthetic capture generator and a held-out-device evaluation harness
  (synth, evaluation)
- Django models, a REST API, Celery tasks and the ``flowclass`` management commands

The pipeline modules do not import Django.
"""
