"""deep_harness: LSTM / TCN / DeepLOB benchmarks on exported tensor files."""

__version__ = "0.1.0"
