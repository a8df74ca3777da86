"""Feature extractor companion package: runs pretrained object-recognition
networks over image directories and writes feature files in the privacy
toolkit's JSONL corpus format."""

__version__ = "0.1.0"
