"""privacykit: image privacy prediction toolkit (kernel SVM, bag-of-tags,
tag CNN, fusion, baselines, and evaluation harness)."""

__version__ = "0.1.0"
