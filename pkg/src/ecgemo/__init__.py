"""ECG-only binary emotion recognition: conditioning, features, selection, models, evaluation."""

__version__ = "0.1.0"
